#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gvfl/dense_matrix.hpp"

namespace gvfl {

/// Sparse symmetric matrix in coordinate form. Each off-diagonal entry is
/// stored once with row <= col and expanded on access; the coordinate list is
/// kept sorted and duplicate-free.
class SparseSymMatrix {
 public:
  struct Entry {
    int row;
    int col;
    double value;
  };

  SparseSymMatrix() = default;
  explicit SparseSymMatrix(int n) : n_(n) {}

  /// Builds a binary adjacency from an undirected edge list. Duplicate pairs
  /// collapse; self-loops are rejected.
  static SparseSymMatrix from_edges(
      int n, std::span<const std::pair<int, int>> edges);

  int n() const { return n_; }
  /// Stored entries (row <= col), including any diagonal.
  std::span<const Entry> stored() const { return entries_; }
  int stored_count() const { return static_cast<int>(entries_.size()); }
  /// Off-diagonal stored entries = undirected edge count for binary matrices.
  int num_offdiag() const;

  double at(int r, int c) const;
  bool has(int r, int c) const { return at(r, c) != 0.0; }
  void set(int r, int c, double v);

  /// A[u][v] <- 1 - A[u][v], both orientations. Off-diagonal only.
  void toggle_edge(int u, int v);

  /// Visits every nonzero as (r, c, v): stored entries plus their mirrored
  /// twins; diagonal entries are visited once.
  template <typename F>
  void for_each_expanded(F&& f) const {
    for (const Entry& e : entries_) {
      f(e.row, e.col, e.value);
      if (e.row != e.col) f(e.col, e.row, e.value);
    }
  }

  /// d_i = 1 + sum_j A_ij (the degree of A + I for binary A).
  std::vector<double> degrees_plus_self() const;

  /// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
  SparseSymMatrix normalized() const;

  /// y = S * m, using symmetric expansion.
  DenseMatrix spmm(const DenseMatrix& m) const;

  DenseMatrix to_dense() const;

  /// Count of entries differing from `other` over the full (expanded) matrix.
  int hamming_distance(const SparseSymMatrix& other) const;

  bool operator==(const SparseSymMatrix& o) const;

 private:
  void check_indices(int r, int c) const;
  int find(int r, int c) const;  // index into entries_ or -1

  int n_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace gvfl
