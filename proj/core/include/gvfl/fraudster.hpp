#pragma once

#include <span>
#include <vector>

#include "gvfl/federation.hpp"

namespace gvfl {

/// Generative regression network: three-layer MLP with ReLU, input K*d,
/// hidden 512 and 256, output (K-1)*d — the other participants' embedding
/// slices.
struct Grn {
  DenseMatrix w0;
  DenseMatrix w1;
  DenseMatrix w2;

  static Grn init(int k, int embed_dim, SeededRng& rng);
  DenseMatrix generate(const DenseMatrix& h_in) const;
};

/// Attacker-side replica of the server: same architecture (structure is
/// known), independently trained parameters.
struct ShadowServer {
  ServerModel model;
};

struct StealOptions {
  int iters = 200;
  double lr = 0.01;
  double fd_step = 1e-4;  // central-difference step for query gradients
};

struct StealResult {
  DenseMatrix h_fake;  // n x K*d, malicious slice equals h_m throughout
  std::vector<double> loss_history;  // L_GRN per iteration, initial first
  Grn grn;
};

/// Trains the GRN against probability queries only: the loss gradient with
/// respect to the generated columns is estimated by central differences of
/// per-row query losses (rows are independent through the server), then
/// backpropagated through the attacker's own MLP. h_fake keeps the malicious
/// participant's true embeddings in its slot at every iteration.
StealResult steal_embeddings(const ProbabilityApi& api, const DenseMatrix& h_m,
                             int malicious_idx, int num_participants,
                             const DenseMatrix& final_probs, SeededRng& rng,
                             const StealOptions& opts = {});

struct ShadowOptions {
  int iters = 200;
  double lr = 0.01;
  std::vector<int> hidden = {32};
};

struct ShadowResult {
  ShadowServer shadow;
  std::vector<double> loss_history;
};

/// Fits the shadow to the stored probabilities by MSE on S~(h_fake).
ShadowResult train_shadow(const DenseMatrix& h_fake,
                          const DenseMatrix& final_probs, SeededRng& rng,
                          const ShadowOptions& opts = {});

/// FGSM on the shadow: h + eps * sign(dL_atk/dh), with L_atk the
/// cross-entropy of the shadow's output against attack_label. eps in [0,1].
DenseMatrix add_noise(const ShadowServer& shadow, const DenseMatrix& h_fake_row,
                      int attack_label, double eps);

enum class CandidateMode {
  kTargetIncident,  // all pairs (v_t, u), u != v_t
  kAllPairs,
};

std::vector<NodePair> make_candidates(int n, int v_t, CandidateMode mode);

struct SelectResult {
  SparseSymMatrix adversarial;
  std::vector<NodePair> flips;
  std::vector<double> lt_history;  // guidance loss before each flip + final
};

/// Budgeted edge perturbation: per iteration, the pairwise gradients of the
/// guidance loss L_t = mean((f(A_hat, X, v_t) - guidance)^2) are symmetrized
/// and the pair maximizing -g_sym is toggled (ties: lexicographically
/// smallest pair). A pair is flipped at most once.
SelectResult select_edges(const LocalModel& model,
                          const SparseSymMatrix& adjacency,
                          const DenseMatrix& features, int v_t,
                          const DenseMatrix& guidance, int delta,
                          std::span<const NodePair> candidates);

struct TargetOutcome {
  int node = -1;
  int attack_label = -1;
  std::vector<NodePair> flips;
  int clean_pred = -1;
  int adv_pred = -1;
  double margin_before = 0.0;
  double margin_after = 0.0;
  std::vector<double> lt_history;
  bool success = false;  // misclassified after the attack
};

struct FraudsterOptions {
  double eps = 0.01;
  int delta = 1;
  StealOptions steal;
  ShadowOptions shadow;
  CandidateMode candidates = CandidateMode::kTargetIncident;
};

struct AttackRun {
  std::string method = "fraudster";
  double eps = 0.0;
  int delta = 1;
  int malicious = 0;
  std::vector<double> grn_loss;
  std::vector<double> shadow_loss;
  double shadow_agreement = 0.0;  // argmax agreement with the real server
  std::vector<TargetOutcome> targets;
  double post_accuracy = 0.0;  // over the target set, true labels
};

/// Full chain: steal -> shadow -> per-target noise -> per-target edge
/// selection -> re-evaluation through the real server. Only the malicious
/// participant's edge shard is ever perturbed, each target on its own copy.
AttackRun run_attack(const GvflSystem& system, int malicious_idx,
                     std::span<const int> targets, SeededRng& rng,
                     const FraudsterOptions& opts = {});

}  // namespace gvfl
