#include "gvfl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gvfl {

namespace {

int argmax_row(const DenseMatrix& m, int r) {
  int best = 0;
  for (int c = 1; c < m.cols(); ++c)
    if (m(r, c) > m(r, best)) best = c;
  return best;
}

double margin_row(const DenseMatrix& probs, int r, int true_class) {
  double other = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < probs.cols(); ++c)
    if (c != true_class) other = std::max(other, probs(r, c));
  return probs(r, true_class) - other;
}

}  // namespace

DenseMatrix Surrogate::predict_probs(const SparseSymMatrix& adjacency,
                                     const DenseMatrix& features) const {
  return row_softmax(matmul(forward(gnn, adjacency, features), head));
}

SurrogateResult train_surrogate(const GvflSystem& system, int malicious_idx,
                                SeededRng& rng, int epochs) {
  if (!system.trained)
    throw std::logic_error("train_surrogate: untrained system");
  const Participant& mal =
      system.participants[static_cast<std::size_t>(malicious_idx)];

  std::vector<int> hard_labels(static_cast<std::size_t>(system.n()));
  for (int r = 0; r < system.n(); ++r)
    hard_labels[static_cast<std::size_t>(r)] =
        argmax_row(system.final_probs, r);

  SurrogateResult result;
  result.surrogate.gnn =
      LocalModel::init(mal.model.kind, mal.features.cols(),
                       system.config.hidden_dim, system.config.embed_dim, rng);
  result.surrogate.head = DenseMatrix::glorot(system.config.embed_dim,
                                              system.num_classes, rng);
  Surrogate& s = result.surrogate;

  AdamOptimizer::Config acfg;
  acfg.lr = system.config.lr;
  AdamOptimizer adam(acfg);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    Tape tape;
    ForwardOptions opts;
    opts.train_params = true;
    const ForwardHandles h =
        build_forward(tape, s.gnn, mal.edges, mal.features, opts);
    const Tape::Id head = tape.leaf(s.head, true);
    const Tape::Id probs = tape.row_softmax(tape.matmul(h.embedding, head));
    const Tape::Id loss =
        tape.cross_entropy(probs, hard_labels, system.split.train);
    result.loss_history.push_back(tape.value(loss).scalar_value());
    tape.backward(loss);
    const DenseMatrix g0 = tape.gradient(h.w0);
    const DenseMatrix g1 = tape.gradient(h.w1);
    const DenseMatrix gh = tape.gradient(head);
    adam.step({&s.gnn.w0, &s.gnn.w1, &s.head}, {&g0, &g1, &gh});
  }

  const DenseMatrix sp = s.predict_probs(mal.edges, mal.features);
  int agree = 0;
  for (int v : system.split.test)
    agree += argmax_row(sp, v) == argmax_row(system.final_probs, v);
  result.agreement = static_cast<double>(agree) /
                     static_cast<double>(system.split.test.size());
  return result;
}

SelectResult rnd_attack(const Surrogate& surrogate,
                        const SparseSymMatrix& adjacency,
                        const DenseMatrix& features, int v_t, int delta,
                        SeededRng& rng) {
  if (delta < 1) throw std::invalid_argument("rnd_attack: delta must be >= 1");
  const DenseMatrix probs = surrogate.predict_probs(adjacency, features);
  const int target_label = argmax_row(probs, v_t);

  SelectResult result;
  result.adversarial = adjacency;
  for (int step = 0; step < delta; ++step) {
    std::vector<int> pool;
    for (int u = 0; u < adjacency.n(); ++u) {
      if (u == v_t || argmax_row(probs, u) == target_label) continue;
      if (result.adversarial.has(v_t, u)) continue;  // only edge additions
      pool.push_back(u);
    }
    if (pool.empty())
      throw std::runtime_error(
          "rnd_attack: no non-adjacent node with a different predicted label");
    const int u = pool[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(pool.size())))];
    result.adversarial.toggle_edge(v_t, u);
    result.flips.emplace_back(v_t, u);
  }
  return result;
}

SelectResult fga_attack(const Surrogate& surrogate,
                        const SparseSymMatrix& adjacency,
                        const DenseMatrix& features, int v_t, int delta,
                        CandidateMode mode) {
  if (delta < 1) throw std::invalid_argument("fga_attack: delta must be >= 1");
  const DenseMatrix probs = surrogate.predict_probs(adjacency, features);
  const int pseudo_label = argmax_row(probs, v_t);

  SelectResult result;
  result.adversarial = adjacency;
  std::set<NodePair> flipped;
  const std::vector<NodePair> candidates =
      make_candidates(adjacency.n(), v_t, mode);

  // Loss the attack maximizes: surrogate cross-entropy at the target against
  // its own predicted label (ground truth is unavailable).
  const DenseMatrix& head = surrogate.head;
  const EmbeddingLoss loss = [&](Tape& tape, Tape::Id emb) {
    const Tape::Id row = tape.gather_rows(emb, {v_t});
    const Tape::Id logits = tape.matmul(row, tape.leaf(head, false));
    return tape.cross_entropy(tape.row_softmax(logits), {pseudo_label}, {0});
  };

  for (int step = 0; step < delta; ++step) {
    std::vector<NodePair> remaining;
    for (const NodePair& p : candidates)
      if (!flipped.contains(p)) remaining.push_back(p);
    if (remaining.empty())
      throw std::runtime_error("fga_attack: candidate set exhausted");

    const std::vector<PairGradient> grads = grad_wrt_adjacency(
        surrogate.gnn, result.adversarial, features, loss, remaining);

    const PairGradient* best = nullptr;
    for (const PairGradient& g : grads) {
      const bool present = result.adversarial.has(g.pair.u, g.pair.v);
      const double gs = g.sym();
      const bool raises_loss = present ? gs < 0.0 : gs > 0.0;
      if (!raises_loss) continue;
      if (!best || std::abs(gs) > std::abs(best->sym()) ||
          (std::abs(gs) == std::abs(best->sym()) && g.pair < best->pair))
        best = &g;
    }
    if (!best)
      throw std::runtime_error(
          "fga_attack: no flip direction increases the loss");
    result.adversarial.toggle_edge(best->pair.u, best->pair.v);
    result.flips.push_back(best->pair);
    flipped.insert(best->pair);
  }
  return result;
}

AttackRun run_baseline(const GvflSystem& system, int malicious_idx,
                       const std::string& method, std::span<const int> targets,
                       SeededRng& rng, const BaselineOptions& opts) {
  if (method != "rnd" && method != "fga")
    throw std::invalid_argument("run_baseline: unknown method " + method);
  const Participant& mal =
      system.participants[static_cast<std::size_t>(malicious_idx)];

  SeededRng surrogate_rng = rng.split(1);
  SurrogateResult sr =
      train_surrogate(system, malicious_idx, surrogate_rng, opts.surrogate_epochs);

  AttackRun run;
  run.method = method;
  run.delta = opts.delta;
  run.malicious = malicious_idx;
  run.shadow_agreement = sr.agreement;

  SeededRng attack_rng = rng.split(2);
  int successes = 0;
  for (int v_t : targets) {
    TargetOutcome outcome;
    outcome.node = v_t;
    const int y = system.labels[static_cast<std::size_t>(v_t)];
    outcome.clean_pred = argmax_row(system.final_probs, v_t);
    outcome.margin_before = margin_row(system.final_probs, v_t, y);

    SelectResult sel =
        method == "rnd"
            ? rnd_attack(sr.surrogate, mal.edges, mal.features, v_t,
                         opts.delta, attack_rng)
            : fga_attack(sr.surrogate, mal.edges, mal.features, v_t,
                         opts.delta, opts.candidates);
    outcome.flips = sel.flips;

    const DenseMatrix adv_emb =
        forward(mal.model, sel.adversarial, mal.features);
    const std::vector<EmbeddingOverride> over{{malicious_idx, adv_emb}};
    const DenseMatrix probs = system_probs(system, over);
    outcome.adv_pred = argmax_row(probs, v_t);
    outcome.margin_after = margin_row(probs, v_t, y);
    outcome.success = outcome.margin_after <= 0.0;
    successes += outcome.success ? 0 : 1;
    run.targets.push_back(std::move(outcome));
  }
  run.post_accuracy =
      targets.empty() ? 0.0
                      : static_cast<double>(successes) /
                            static_cast<double>(targets.size());
  return run;
}

}  // namespace gvfl
