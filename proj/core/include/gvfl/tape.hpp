#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gvfl/dense_matrix.hpp"
#include "gvfl/sparse_sym.hpp"

namespace gvfl {

/// Unordered node pair (u != v), canonically stored with u < v.
struct NodePair {
  int u;
  int v;
  NodePair(int a, int b) : u(a < b ? a : b), v(a < b ? b : a) {}
  bool operator==(const NodePair&) const = default;
  bool operator<(const NodePair& o) const {
    return u != o.u ? u < o.u : v < o.v;
  }
};

/// Per-entry adjacency gradients for one unordered pair. `forward` is
/// dL/dA[u][v], `backward` is dL/dA[v][u]; sym() is their average, which is
/// the symmetrized edge score used for flip selection.
struct PairGradient {
  NodePair pair;
  double forward;
  double backward;
  double sym() const { return 0.5 * (forward + backward); }
};

/// Reverse-mode tape over dense matrices plus a differentiable sparse
/// adjacency path. Values are computed eagerly as nodes are recorded; the
/// backward pass replays the record in exact reverse order.
///
/// Adjacency gradients: normalize() forms N = D^{-1/2}(A+I)D^{-1/2} from a
/// raw adjacency leaf. With G the loss gradient with respect to N and
/// s_u = sum_j G_uj*N_uj + sum_i G_iu*N_iu, perturbing the single raw entry
/// A[u][v] moves the loss by
///     dL/dA[u][v] = G_uv / sqrt(d_u d_v) - s_u / (2 d_u),
/// the first term from the numerator of N_uv and the second from every entry
/// in row/column u through the degree d_u. G is only ever needed on the
/// support of N plus the caller-declared candidate pairs, so the backward
/// pass materializes exactly those entries.
class Tape {
 public:
  using Id = std::int32_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // -- leaves ---------------------------------------------------------------
  Id leaf(DenseMatrix value, bool trainable = false);
  Id adjacency(SparseSymMatrix raw, bool trainable = false);

  /// Replaces a dense leaf's value (shape-checked); use with recompute().
  void update_leaf(Id id, const DenseMatrix& value);

  // -- ops ------------------------------------------------------------------
  Id normalize(Id adj);
  Id matmul(Id a, Id b);
  Id spmm(Id norm_adj, Id dense);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id hadamard(Id a, Id b);
  Id scale(Id a, double s);
  Id relu(Id a);
  Id concat_cols(std::span<const Id> parts);
  Id slice_cols(Id a, int begin, int end);
  Id gather_rows(Id a, std::vector<int> rows);
  Id row_softmax(Id a);
  /// -sum_{l in mask} ln probs[l, labels[l]]; scalar output.
  Id cross_entropy(Id probs, std::vector<int> labels, std::vector<int> mask);
  /// Mean over all elements of (a-b)^2; scalar output.
  Id mse(Id a, Id b);
  Id sum(Id a);

  // -- access ---------------------------------------------------------------
  const DenseMatrix& value(Id id) const;
  const SparseSymMatrix& adjacency_value(Id id) const;
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  /// Recomputes every non-leaf value in recording order.
  void recompute();

  // -- backward -------------------------------------------------------------
  /// Declares the raw-entry pairs whose gradients backward() materializes.
  /// Both orientations of each pair are produced.
  void declare_candidates(Id adj, std::span<const NodePair> pairs);

  /// Backward from a scalar loss node (seed 1).
  void backward(Id loss);
  /// Backward seeded with an explicit upstream gradient at `node`.
  void backward_seeded(Id node, const DenseMatrix& seed);

  /// Gradient of the last backward pass; zero matrix for untouched nodes.
  DenseMatrix gradient(Id id) const;
  /// Per-pair adjacency gradients for the declared candidates.
  PairGradient pair_gradient(Id adj, NodePair p) const;
  std::vector<PairGradient> pair_gradients(Id adj) const;

 private:
  enum class Op : std::uint8_t {
    kLeaf, kAdjacency, kNormalize, kMatMul, kSpmm, kAdd, kSub, kHadamard,
    kScale, kRelu, kConcatCols, kSliceCols, kGatherRows, kRowSoftmax,
    kCrossEntropy, kMse, kSum,
  };

  struct SparseOperand {  // cached nonzeros of a constant matmul lhs
    std::vector<std::pair<int, int>> coords;
    std::vector<double> values;
  };

  struct AdjData {  // per adjacency leaf
    SparseSymMatrix raw;
    std::vector<std::pair<int, int>> candidates;  // ordered, both orientations
    std::unordered_map<std::uint64_t, double> pair_grad;
  };

  struct NormData {  // per normalize node
    SparseSymMatrix norm;
    std::vector<double> degrees;
    std::vector<double> gbar_upper;  // G on stored (r,c)
    std::vector<double> gbar_lower;  // G on mirrored (c,r)
    std::unordered_map<std::uint64_t, double> cand_gbar;
  };

  struct Node {
    Op op;
    Id a = -1;
    Id b = -1;
    DenseMatrix value;
    bool trainable = false;
    bool needs_grad = false;
    double scalar = 0.0;
    std::vector<Id> inputs;      // kConcatCols
    std::vector<int> ints;       // slice range / gather rows / labels
    std::vector<int> mask;       // kCrossEntropy
    int adj_slot = -1;           // kAdjacency
    int norm_slot = -1;          // kNormalize
    std::optional<SparseOperand> sparse_lhs;  // kMatMul fast path
  };

  Id push(Node n);
  const Node& at(Id id) const;
  Node& at(Id id);
  void check_id(Id id) const;
  DenseMatrix& grad_buffer(Id id);
  void eval(Node& n);
  void backward_from(Id root, const DenseMatrix& seed);
  void backward_node(Id id);
  void finalize_adjacency(const Node& norm_node);

  std::vector<Node> nodes_;
  std::vector<AdjData> adj_;
  std::vector<NormData> norms_;
  std::vector<std::optional<DenseMatrix>> grads_;
  bool ran_backward_ = false;
};

}  // namespace gvfl
