#pragma once

#include <span>

#include "gvfl/fraudster.hpp"

namespace gvfl {

/// Attacker-local GNN plus classifier head, distilled from the server's
/// predictions using only the malicious shard.
struct Surrogate {
  LocalModel gnn;
  DenseMatrix head;  // d x |F|

  DenseMatrix predict_probs(const SparseSymMatrix& adjacency,
                            const DenseMatrix& features) const;
};

struct SurrogateResult {
  Surrogate surrogate;
  double agreement = 0.0;  // argmax agreement with the server on test nodes
  std::vector<double> loss_history;
};

/// Hard-label distillation: cross-entropy between the surrogate's prediction
/// and argmax of the server's stored probabilities over train nodes.
SurrogateResult train_surrogate(const GvflSystem& system, int malicious_idx,
                                SeededRng& rng, int epochs = 200);

/// RND: adds delta edges from the target to uniformly sampled non-adjacent
/// nodes whose surrogate-predicted label differs from the target's.
SelectResult rnd_attack(const Surrogate& surrogate,
                        const SparseSymMatrix& adjacency,
                        const DenseMatrix& features, int v_t, int delta,
                        SeededRng& rng);

/// FGA: flips the candidate pair with maximal |g_sym| whose flip direction
/// increases the surrogate's loss at the target (add when the gradient is
/// positive on an absent edge, delete when negative on a present edge).
SelectResult fga_attack(const Surrogate& surrogate,
                        const SparseSymMatrix& adjacency,
                        const DenseMatrix& features, int v_t, int delta,
                        CandidateMode mode = CandidateMode::kTargetIncident);

struct BaselineOptions {
  int delta = 1;
  int surrogate_epochs = 200;
  CandidateMode candidates = CandidateMode::kTargetIncident;
};

/// Shared transfer-attack driver: trains the surrogate, perturbs each
/// target's copy of the malicious shard, re-evaluates through the real
/// server. method is "rnd" or "fga".
AttackRun run_baseline(const GvflSystem& system, int malicious_idx,
                       const std::string& method, std::span<const int> targets,
                       SeededRng& rng, const BaselineOptions& opts = {});

}  // namespace gvfl
