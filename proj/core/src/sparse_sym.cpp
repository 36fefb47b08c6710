#include "gvfl/sparse_sym.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gvfl {

namespace {

bool coord_less(const SparseSymMatrix::Entry& e, std::pair<int, int> rc) {
  return e.row != rc.first ? e.row < rc.first : e.col < rc.second;
}

}  // namespace

SparseSymMatrix SparseSymMatrix::from_edges(
    int n, std::span<const std::pair<int, int>> edges) {
  SparseSymMatrix m(n);
  std::vector<std::pair<int, int>> canon;
  canon.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::out_of_range("from_edges: node id out of range");
    if (u == v) throw std::invalid_argument("from_edges: self-loop");
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
  m.entries_.reserve(canon.size());
  for (auto [u, v] : canon) m.entries_.push_back({u, v, 1.0});
  return m;
}

int SparseSymMatrix::num_offdiag() const {
  int k = 0;
  for (const Entry& e : entries_)
    if (e.row != e.col) ++k;
  return k;
}

void SparseSymMatrix::check_indices(int r, int c) const {
  if (r < 0 || r >= n_ || c < 0 || c >= n_)
    throw std::out_of_range("sparse index out of range");
}

int SparseSymMatrix::find(int r, int c) const {
  const std::pair<int, int> rc{std::min(r, c), std::max(r, c)};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), rc, coord_less);
  if (it != entries_.end() && it->row == rc.first && it->col == rc.second)
    return static_cast<int>(it - entries_.begin());
  return -1;
}

double SparseSymMatrix::at(int r, int c) const {
  check_indices(r, c);
  const int i = find(r, c);
  return i < 0 ? 0.0 : entries_[static_cast<std::size_t>(i)].value;
}

void SparseSymMatrix::set(int r, int c, double v) {
  check_indices(r, c);
  const std::pair<int, int> rc{std::min(r, c), std::max(r, c)};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), rc, coord_less);
  const bool present =
      it != entries_.end() && it->row == rc.first && it->col == rc.second;
  if (v == 0.0) {
    if (present) entries_.erase(it);
  } else if (present) {
    it->value = v;
  } else {
    entries_.insert(it, {rc.first, rc.second, v});
  }
}

void SparseSymMatrix::toggle_edge(int u, int v) {
  check_indices(u, v);
  if (u == v) throw std::invalid_argument("toggle_edge: self-loop");
  set(u, v, at(u, v) == 0.0 ? 1.0 : 0.0);
}

std::vector<double> SparseSymMatrix::degrees_plus_self() const {
  std::vector<double> d(static_cast<std::size_t>(n_), 1.0);
  for_each_expanded([&](int r, int, double v) { d[static_cast<std::size_t>(r)] += v; });
  return d;
}

SparseSymMatrix SparseSymMatrix::normalized() const {
  const std::vector<double> d = degrees_plus_self();
  SparseSymMatrix out(n_);
  out.entries_.reserve(entries_.size() + static_cast<std::size_t>(n_));
  // Merge the self-loop diagonal of A + I with the stored entries, keeping
  // the coordinate list sorted.
  std::size_t i = 0;
  for (int r = 0; r < n_; ++r) {
    double diag = 1.0;
    if (i < entries_.size() && entries_[i].row == r && entries_[i].col == r) {
      diag += entries_[i].value;
      ++i;
    }
    out.entries_.push_back({r, r, diag / d[static_cast<std::size_t>(r)]});
    while (i < entries_.size() && entries_[i].row == r) {
      const Entry& e = entries_[i];
      out.entries_.push_back(
          {r, e.col,
           e.value / std::sqrt(d[static_cast<std::size_t>(r)] *
                               d[static_cast<std::size_t>(e.col)])});
      ++i;
    }
  }
  return out;
}

DenseMatrix SparseSymMatrix::spmm(const DenseMatrix& m) const {
  if (m.rows() != n_)
    throw std::invalid_argument("spmm: row count does not match n");
  DenseMatrix out(n_, m.cols());
  const int cols = m.cols();
  for_each_expanded([&](int r, int c, double v) {
    const double* src = m.data() + static_cast<std::size_t>(c) * cols;
    double* dst = out.data() + static_cast<std::size_t>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] += v * src[j];
  });
  return out;
}

DenseMatrix SparseSymMatrix::to_dense() const {
  DenseMatrix out(n_, n_);
  for_each_expanded([&](int r, int c, double v) { out(r, c) = v; });
  return out;
}

int SparseSymMatrix::hamming_distance(const SparseSymMatrix& other) const {
  if (n_ != other.n_) throw std::invalid_argument("hamming: size mismatch");
  int diff = 0;
  for (const Entry& e : entries_)
    if (other.at(e.row, e.col) != e.value) diff += e.row == e.col ? 1 : 2;
  for (const Entry& e : other.entries_)
    if (at(e.row, e.col) == 0.0 && e.value != 0.0)
      diff += e.row == e.col ? 1 : 2;
  return diff;
}

bool SparseSymMatrix::operator==(const SparseSymMatrix& o) const {
  if (n_ != o.n_ || entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].row != o.entries_[i].row ||
        entries_[i].col != o.entries_[i].col ||
        entries_[i].value != o.entries_[i].value)
      return false;
  }
  return true;
}

}  // namespace gvfl
