#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "gvfl/defense.hpp"
#include "gvfl/graph.hpp"
#include "gvfl/local_model.hpp"
#include "gvfl/partition.hpp"

namespace gvfl {

/// MLP classifier over concatenated embeddings: ReLU between hidden layers,
/// row softmax on the output. No biases.
struct ServerModel {
  std::vector<DenseMatrix> weights;

  static ServerModel init(int input_dim, const std::vector<int>& hidden,
                          int num_classes, SeededRng& rng);

  int input_dim() const { return weights.front().rows(); }
  int num_classes() const { return weights.back().cols(); }

  DenseMatrix predict_probs(const DenseMatrix& h_global) const;
};

/// Records the server forward on a tape. When weight_leaves is non-null the
/// weights are recorded trainable and their leaf ids are appended to it.
Tape::Id server_forward(Tape& tape, const ServerModel& server, Tape::Id h,
                        std::vector<Tape::Id>* weight_leaves = nullptr);

/// Query-only handle on a trained server: callers get probabilities for any
/// embedding input and nothing else. The type deliberately has no accessor
/// for the underlying parameters.
class ProbabilityApi {
 public:
  explicit ProbabilityApi(ServerModel server) : server_(std::move(server)) {}

  DenseMatrix predict(const DenseMatrix& h_global) const;
  int input_dim() const { return server_.input_dim(); }
  int num_classes() const { return server_.num_classes(); }

 private:
  ServerModel server_;
};

inline DenseMatrix predict(const ProbabilityApi& api,
                           const DenseMatrix& h_global) {
  return api.predict(h_global);
}

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  int hidden_dim = 32;
  int embed_dim = 16;
  std::vector<int> server_hidden = {32};
  DefenseConfig defense;
};

struct Participant {
  LocalModel model;
  SparseSymMatrix edges;
  DenseMatrix features;
  std::vector<int> feature_columns;
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int epoch)
      : std::runtime_error("training diverged at epoch " +
                           std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// One federation: K participants, server, split, and after train() the
/// stored end-of-training state the attack modules consume.
struct GvflSystem {
  std::vector<Participant> participants;
  ServerModel server;
  SplitSpec split;
  TrainConfig config;
  std::vector<int> labels;
  int num_classes = 0;

  bool trained = false;
  std::vector<double> train_loss;
  /// Defended uploads per participant, cached at end of training; the
  /// inference-time view of the system.
  std::vector<DenseMatrix> uploads;
  /// P: probabilities on all nodes from the cached uploads.
  DenseMatrix final_probs;
  std::uint64_t defense_seed = 0;

  int k() const { return static_cast<int>(participants.size()); }
  int n() const { return static_cast<int>(labels.size()); }
  int global_dim() const { return k() * config.embed_dim; }
  ProbabilityApi api() const;
};

GvflSystem build_system(const Graph& g, const VerticalPartition& part,
                        const SplitSpec& split, ModelKind kind,
                        const TrainConfig& cfg, SeededRng& rng);

/// Full-batch joint training over the split protocol: participants upload,
/// the server classifies and returns per-participant gradient slices, and
/// everyone takes an Adam step. Stores the loss trajectory, the cached
/// uploads, and the final probability matrix P.
void train(GvflSystem& system, SeededRng& rng);

/// Column-wise concatenation in participant order.
DenseMatrix concat_embeddings(std::span<const DenseMatrix> parts);

/// Applies the system's defense to one participant's raw upload; stream
/// depends on (defense_seed, participant, tag) so evaluations are
/// reproducible.
DenseMatrix apply_defense(const GvflSystem& system, int participant,
                          const DenseMatrix& raw, std::uint64_t tag);

struct EmbeddingOverride {
  int participant;
  DenseMatrix embedding;  // raw upload; defense applies like any other
};

/// Fraction of nodes whose true class probability strictly exceeds every
/// other class. Overrides substitute raw uploads before defense.
double accuracy(const GvflSystem& system, std::span<const int> nodes,
                std::span<const EmbeddingOverride> overrides = {});

/// Probabilities for the given nodes with optional overrides.
DenseMatrix system_probs(const GvflSystem& system,
                         std::span<const EmbeddingOverride> overrides = {});

/// C_i = acc_i / sum_j acc_j where acc_i is test accuracy with every slice
/// except participant i's zero-filled.
std::vector<double> contribution(const GvflSystem& system);

/// Checkpoint directory: server plus per-participant parameter dumps.
void save_system(const GvflSystem& system, const std::filesystem::path& dir);

}  // namespace gvfl
