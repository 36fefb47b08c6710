#pragma once

#include <filesystem>
#include <functional>
#include <span>

#include "gvfl/adam.hpp"
#include "gvfl/dense_matrix.hpp"
#include "gvfl/rng.hpp"
#include "gvfl/sparse_sym.hpp"
#include "gvfl/tape.hpp"

namespace gvfl {

enum class ModelKind { kGcn, kSgc };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Participant-side two-layer GNN. GCN applies N*ReLU(N*X*W0)*W1 and SGC the
/// linearized N*N*X*W0*W1, with N the self-loop-normalized adjacency
/// recomputed from the raw edges on every forward so adjacency gradients
/// carry the degree terms. No biases.
struct LocalModel {
  ModelKind kind = ModelKind::kGcn;
  DenseMatrix w0;  // F_local x hidden
  DenseMatrix w1;  // hidden x d

  static LocalModel init(ModelKind kind, int in_dim, int hidden, int embed_dim,
                         SeededRng& rng);

  int input_dim() const { return w0.rows(); }
  int hidden_dim() const { return w0.cols(); }
  int embed_dim() const { return w1.cols(); }
};

struct ForwardOptions {
  bool train_params = false;    // record W0/W1 as trainable leaves
  bool adjacency_grad = false;  // record the adjacency as a trainable leaf
};

struct ForwardHandles {
  Tape::Id adj = -1;
  Tape::Id w0 = -1;
  Tape::Id w1 = -1;
  Tape::Id embedding = -1;
};

/// Records the model's forward pass on the tape and returns the handles
/// needed to read values and route gradients.
ForwardHandles build_forward(Tape& tape, const LocalModel& model,
                             const SparseSymMatrix& adjacency,
                             const DenseMatrix& features,
                             const ForwardOptions& opts = {});

/// Plain n x d embedding forward.
DenseMatrix forward(const LocalModel& model, const SparseSymMatrix& adjacency,
                    const DenseMatrix& features);

/// Builds a scalar loss from the embedding node; used to parameterize the
/// adjacency gradient below.
using EmbeddingLoss = std::function<Tape::Id(Tape&, Tape::Id)>;

/// dLoss/dA[u][v] per candidate pair, differentiated through the degree
/// normalization at the current binary adjacency.
std::vector<PairGradient> grad_wrt_adjacency(
    const LocalModel& model, const SparseSymMatrix& adjacency,
    const DenseMatrix& features, const EmbeddingLoss& loss,
    std::span<const NodePair> candidates);

/// Split-training step: backpropagates the server-provided gradient of the
/// loss with respect to this participant's embeddings into W0/W1 and applies
/// one Adam update.
void local_step(LocalModel& model, const SparseSymMatrix& adjacency,
                const DenseMatrix& features, const DenseMatrix& upstream_grad,
                AdamOptimizer& adam);

/// Checkpointing: <base>.json shape header plus <base>_w0.csv / <base>_w1.csv.
void save_model(const LocalModel& model, const std::filesystem::path& base);
LocalModel load_model(const std::filesystem::path& base);

}  // namespace gvfl
