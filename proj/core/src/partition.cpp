#include "gvfl/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gvfl {

DenseMatrix VerticalPartition::shard_features(const Graph& g, int p) const {
  const auto& cols = feature_columns.at(static_cast<std::size_t>(p));
  DenseMatrix out(g.n, static_cast<int>(cols.size()));
  for (int r = 0; r < g.n; ++r)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(r, static_cast<int>(j)) = g.features(r, cols[j]);
  return out;
}

VerticalPartition partition(const Graph& g, int k, PartitionMode mode,
                            SeededRng& rng) {
  if (k < 2) throw std::invalid_argument("partition: k must be >= 2");
  if (mode == PartitionMode::kDualSplit && k != 2)
    throw std::invalid_argument("partition: dual-split requires k == 2");

  VerticalPartition part;
  part.k = k;
  part.mode = mode;

  // Random column permutation, dealt into near-equal contiguous chunks.
  std::vector<int> cols(static_cast<std::size_t>(g.feature_dim()));
  std::iota(cols.begin(), cols.end(), 0);
  rng.shuffle(cols);
  const int base = g.feature_dim() / k;
  const int rem = g.feature_dim() % k;
  std::size_t pos = 0;
  for (int p = 0; p < k; ++p) {
    const int take = base + (p < rem ? 1 : 0);
    std::vector<int> mine(cols.begin() + static_cast<std::ptrdiff_t>(pos),
                          cols.begin() + static_cast<std::ptrdiff_t>(pos) + take);
    std::sort(mine.begin(), mine.end());
    part.feature_columns.push_back(std::move(mine));
    pos += static_cast<std::size_t>(take);
  }

  if (mode == PartitionMode::kDualSplit) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : g.adjacency.stored())
      if (e.row != e.col) edges.emplace_back(e.row, e.col);
    rng.shuffle(edges);
    const std::size_t half = (edges.size() + 1) / 2;
    std::vector<std::pair<int, int>> first(edges.begin(),
                                           edges.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::pair<int, int>> second(edges.begin() + static_cast<std::ptrdiff_t>(half),
                                            edges.end());
    part.edge_shards.push_back(SparseSymMatrix::from_edges(g.n, first));
    part.edge_shards.push_back(SparseSymMatrix::from_edges(g.n, second));
  } else {
    for (int p = 0; p < k; ++p) part.edge_shards.push_back(g.adjacency);
  }
  return part;
}

}  // namespace gvfl
