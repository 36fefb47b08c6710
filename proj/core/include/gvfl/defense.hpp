#pragma once

#include <string>

#include "gvfl/dense_matrix.hpp"
#include "gvfl/rng.hpp"

namespace gvfl {

enum class DefenseKind { kNone, kDp, kTopK };

const char* to_string(DefenseKind kind);
DefenseKind defense_kind_from_string(const std::string& s);

/// Server-side transform applied to every participant's uploaded embeddings,
/// the malicious one included.
struct DefenseConfig {
  DefenseKind kind = DefenseKind::kNone;
  double beta = 0.1;  // Laplace scale, >= 0
  int k = 16;         // kept components per row, in [1, d]
  /// Conservative default: perturb training uploads as well as inference
  /// uploads. Disable to defend only at inference time.
  bool during_training = true;
  /// Select by absolute value instead of signed value (off by default).
  bool topk_by_abs = false;
};

/// Adds i.i.d. Laplace(0, beta) noise elementwise. beta == 0 is the identity
/// and consumes no randomness.
DenseMatrix dp_perturb(const DenseMatrix& h, double beta, SeededRng& rng);

/// Keeps the k largest values per row (ties keep the lowest index), zeroes
/// the rest.
DenseMatrix topk_filter(const DenseMatrix& h, int k, bool by_abs = false);

/// 0/1 mask of the entries topk_filter would keep.
DenseMatrix topk_mask(const DenseMatrix& h, int k, bool by_abs = false);

}  // namespace gvfl
