#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gvfl/dense_matrix.hpp"
#include "gvfl/rng.hpp"
#include "gvfl/sparse_sym.hpp"

namespace gvfl {

/// Node-classification graph: binary symmetric adjacency without self-loops,
/// dense features, one contiguous class id per node.
struct Graph {
  int n = 0;
  SparseSymMatrix adjacency;
  DenseMatrix features;
  std::vector<int> labels;
  int num_classes = 0;
  /// Original label value -> contiguous id, as remapped by the loader.
  std::map<int, int> label_map;

  int num_edges() const { return adjacency.num_offdiag(); }
  int feature_dim() const { return features.cols(); }
};

struct SplitSpec {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Thrown on malformed input files; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Loads a graph from the three text files described in the repo docs:
/// edge list (u<TAB>v per line), features CSV (row i = node i), labels CSV
/// (node_id,label). Pass an empty features path to substitute one-hot
/// identity features for featureless graphs. Self-loop edge lines are
/// dropped; duplicate edges collapse; labels are remapped to 0..C-1 with the
/// mapping recorded.
Graph load_graph(const std::filesystem::path& edge_list,
                 const std::filesystem::path& features,
                 const std::filesystem::path& labels);

/// Convenience: loads <dir>/edges.tsv, <dir>/features.csv, <dir>/labels.csv.
Graph load_graph_dir(const std::filesystem::path& dir);

struct ConvertStats {
  int nodes = 0;
  int feature_dim = 0;
  int num_classes = 0;
  int cite_lines = 0;
  int skipped_self_loops = 0;
};

/// Converts the citation-graph distribution layout (content/cites) into the
/// loader's formats, written as edges.tsv / features.csv / labels.csv under
/// out_dir. Node ids follow content-file line order; label strings map to
/// contiguous ids in sorted order.
ConvertStats convert_citation_graph(const std::filesystem::path& content,
                                    const std::filesystem::path& cites,
                                    const std::filesystem::path& out_dir);

/// Per-class stratified train set plus disjoint val/test from the remainder.
SplitSpec make_split(const Graph& g, SeededRng& rng, int per_class_train = 20,
                     int val_size = 500, int test_size = 1000);

/// Stochastic block model with block-indicator-plus-noise features and
/// labels equal to block ids.
Graph synth_sbm(const std::vector<int>& block_sizes, double intra_p,
                double inter_p, int feat_dim, SeededRng& rng);

/// D^{-1/2} (A + I) D^{-1/2}; alias for SparseSymMatrix::normalized.
inline SparseSymMatrix normalize(const SparseSymMatrix& a) {
  return a.normalized();
}

}  // namespace gvfl
