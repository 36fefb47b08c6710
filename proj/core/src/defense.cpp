#include "gvfl/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gvfl {

const char* to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kDp: return "dp";
    case DefenseKind::kTopK: return "topk";
  }
  return "none";
}

DefenseKind defense_kind_from_string(const std::string& s) {
  if (s == "none") return DefenseKind::kNone;
  if (s == "dp") return DefenseKind::kDp;
  if (s == "topk") return DefenseKind::kTopK;
  throw std::invalid_argument("unknown defense kind: " + s);
}

DenseMatrix dp_perturb(const DenseMatrix& h, double beta, SeededRng& rng) {
  if (beta < 0.0) throw std::invalid_argument("dp_perturb: negative beta");
  if (beta == 0.0) return h;
  DenseMatrix out = h;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] += rng.laplace(beta);
  return out;
}

DenseMatrix topk_mask(const DenseMatrix& h, int k, bool by_abs) {
  if (k < 1 || k > h.cols())
    throw std::invalid_argument("topk: k must be in [1, cols]");
  DenseMatrix mask(h.rows(), h.cols());
  std::vector<int> idx(static_cast<std::size_t>(h.cols()));
  for (int r = 0; r < h.rows(); ++r) {
    std::iota(idx.begin(), idx.end(), 0);
    const auto better = [&](int a, int b) {
      const double va = by_abs ? std::abs(h(r, a)) : h(r, a);
      const double vb = by_abs ? std::abs(h(r, b)) : h(r, b);
      return va != vb ? va > vb : a < b;  // ties keep the lowest index
    };
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), better);
    for (int j = 0; j < k; ++j) mask(r, idx[static_cast<std::size_t>(j)]) = 1.0;
  }
  return mask;
}

DenseMatrix topk_filter(const DenseMatrix& h, int k, bool by_abs) {
  return hadamard(h, topk_mask(h, k, by_abs));
}

}  // namespace gvfl
