#pragma once

#include <vector>

#include "gvfl/graph.hpp"
#include "gvfl/rng.hpp"

namespace gvfl {

enum class PartitionMode {
  kDualSplit,    // two participants split both edges and feature columns
  kFeatureOnly,  // K participants split feature columns, full graph each
};

/// Vertical shards for K participants over a shared node set. Feature column
/// lists partition [0, F); in dual-split mode the two edge shards partition
/// the edge set, in feature-only mode every shard holds the full adjacency.
struct VerticalPartition {
  int k = 0;
  PartitionMode mode = PartitionMode::kFeatureOnly;
  std::vector<std::vector<int>> feature_columns;  // ascending per participant
  std::vector<SparseSymMatrix> edge_shards;

  /// Materializes participant p's feature matrix (n x |columns_p|).
  DenseMatrix shard_features(const Graph& g, int p) const;
};

/// Uniformly random vertical partition; near-equal column counts (sizes
/// differ by at most one). Dual-split requires k == 2 and also deals the
/// edges into two near-equal shards.
VerticalPartition partition(const Graph& g, int k, PartitionMode mode,
                            SeededRng& rng);

}  // namespace gvfl
