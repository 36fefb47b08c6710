#include "gvfl/fraudster.hpp"

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

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Global column index of generated column j when slices sit in participant
/// order with the malicious slot skipped.
int generated_to_global(int j, int malicious_idx, int d) {
  const int slice = j / d;
  const int offset = j % d;
  const int participant = slice < malicious_idx ? slice : slice + 1;
  return participant * d + offset;
}

DenseMatrix assemble_fake(const DenseMatrix& generated, const DenseMatrix& h_m,
                          int malicious_idx, int k) {
  const int n = h_m.rows();
  const int d = h_m.cols();
  DenseMatrix fake(n, k * d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) fake(r, malicious_idx * d + c) = h_m(r, c);
    for (int j = 0; j < generated.cols(); ++j)
      fake(r, generated_to_global(j, malicious_idx, d)) = generated(r, j);
  }
  return fake;
}

double query_loss(const ProbabilityApi& api, const DenseMatrix& h_fake,
                  const DenseMatrix& target) {
  const DenseMatrix probs = api.predict(h_fake);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double diff = probs.data()[i] - target.data()[i];
    acc += diff * diff;
  }
  return acc / static_cast<double>(probs.size());
}

/// Per-row squared errors of one query; rows are independent through the
/// server, which is what makes column-wise differencing recover per-entry
/// gradients.
std::vector<double> query_row_losses(const ProbabilityApi& api,
                                     const DenseMatrix& h_fake,
                                     const DenseMatrix& target) {
  const DenseMatrix probs = api.predict(h_fake);
  std::vector<double> out(static_cast<std::size_t>(probs.rows()), 0.0);
  for (int r = 0; r < probs.rows(); ++r) {
    double acc = 0.0;
    for (int c = 0; c < probs.cols(); ++c) {
      const double diff = probs(r, c) - target(r, c);
      acc += diff * diff;
    }
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

}  // namespace

Grn Grn::init(int k, int embed_dim, SeededRng& rng) {
  Grn g;
  g.w0 = DenseMatrix::glorot(k * embed_dim, 512, rng);
  g.w1 = DenseMatrix::glorot(512, 256, rng);
  g.w2 = DenseMatrix::glorot(256, (k - 1) * embed_dim, rng);
  return g;
}

DenseMatrix Grn::generate(const DenseMatrix& h_in) const {
  return matmul(relu(matmul(relu(matmul(h_in, w0)), w1)), w2);
}

StealResult steal_embeddings(const ProbabilityApi& api, const DenseMatrix& h_m,
                             int malicious_idx, int num_participants,
                             const DenseMatrix& final_probs, SeededRng& rng,
                             const StealOptions& opts) {
  const int n = h_m.rows();
  const int d = h_m.cols();
  const int k = num_participants;
  if (malicious_idx < 0 || malicious_idx >= k)
    throw std::invalid_argument("steal: malicious index out of range");
  if (api.input_dim() != k * d)
    throw std::invalid_argument("steal: api width does not match K*d");
  if (final_probs.rows() != n || final_probs.cols() != api.num_classes())
    throw std::invalid_argument("steal: probability matrix shape mismatch");

  const int gen_width = (k - 1) * d;
  // One noise draw feeds the whole run.
  DenseMatrix noise(n, gen_width);
  for (std::size_t i = 0; i < noise.size(); ++i)
    noise.data()[i] = rng.normal();
  std::vector<DenseMatrix> in_parts;
  in_parts.push_back(noise);
  in_parts.push_back(h_m);
  const DenseMatrix h_in = concat_cols(in_parts);

  StealResult result;
  result.grn = Grn::init(k, d, rng);
  Grn& grn = result.grn;

  AdamOptimizer::Config acfg;
  acfg.lr = opts.lr;
  AdamOptimizer adam(acfg);

  for (int iter = 0; iter < opts.iters; ++iter) {
    Tape tape;
    const Tape::Id in = tape.leaf(h_in, false);
    const Tape::Id w0 = tape.leaf(grn.w0, true);
    const Tape::Id w1 = tape.leaf(grn.w1, true);
    const Tape::Id w2 = tape.leaf(grn.w2, true);
    const Tape::Id out = tape.matmul(
        tape.relu(tape.matmul(tape.relu(tape.matmul(in, w0)), w1)), w2);

    DenseMatrix h_fake =
        assemble_fake(tape.value(out), h_m, malicious_idx, k);
    result.loss_history.push_back(query_loss(api, h_fake, final_probs));

    // Query-only input gradient: central differences per generated column,
    // per-row losses giving every entry of the column at once.
    const double h = opts.fd_step;
    const double denom =
        2.0 * h * static_cast<double>(final_probs.rows()) *
        static_cast<double>(final_probs.cols());
    DenseMatrix dgen(n, gen_width);
    for (int j = 0; j < gen_width; ++j) {
      const int col = generated_to_global(j, malicious_idx, d);
      for (int r = 0; r < n; ++r) h_fake(r, col) += h;
      const std::vector<double> plus = query_row_losses(api, h_fake, final_probs);
      for (int r = 0; r < n; ++r) h_fake(r, col) -= 2.0 * h;
      const std::vector<double> minus = query_row_losses(api, h_fake, final_probs);
      for (int r = 0; r < n; ++r) {
        h_fake(r, col) += h;
        dgen(r, j) = (plus[static_cast<std::size_t>(r)] -
                      minus[static_cast<std::size_t>(r)]) / denom;
      }
    }

    tape.backward_seeded(out, dgen);
    const DenseMatrix g0 = tape.gradient(w0);
    const DenseMatrix g1 = tape.gradient(w1);
    const DenseMatrix g2 = tape.gradient(w2);
    adam.step({&grn.w0, &grn.w1, &grn.w2}, {&g0, &g1, &g2});
  }

  result.h_fake = assemble_fake(grn.generate(h_in), h_m, malicious_idx, k);
  result.loss_history.push_back(query_loss(api, result.h_fake, final_probs));
  return result;
}

ShadowResult train_shadow(const DenseMatrix& h_fake,
                          const DenseMatrix& final_probs, SeededRng& rng,
                          const ShadowOptions& opts) {
  if (h_fake.rows() != final_probs.rows())
    throw std::invalid_argument("train_shadow: row mismatch");
  ShadowResult result;
  result.shadow.model = ServerModel::init(h_fake.cols(), opts.hidden,
                                          final_probs.cols(), rng);
  AdamOptimizer::Config acfg;
  acfg.lr = opts.lr;
  AdamOptimizer adam(acfg);
  for (int iter = 0; iter < opts.iters; ++iter) {
    Tape tape;
    const Tape::Id in = tape.leaf(h_fake, false);
    std::vector<Tape::Id> wids;
    const Tape::Id probs = server_forward(tape, result.shadow.model, in, &wids);
    const Tape::Id target = tape.leaf(final_probs, false);
    const Tape::Id loss = tape.mse(probs, target);
    result.loss_history.push_back(tape.value(loss).scalar_value());
    tape.backward(loss);
    std::vector<DenseMatrix> grads;
    std::vector<DenseMatrix*> params;
    std::vector<const DenseMatrix*> gptr;
    for (std::size_t i = 0; i < wids.size(); ++i) {
      grads.push_back(tape.gradient(wids[i]));
      params.push_back(&result.shadow.model.weights[i]);
    }
    for (const DenseMatrix& g : grads) gptr.push_back(&g);
    adam.step(params, gptr);
  }
  // Final loss so the trajectory covers the trained state.
  Tape tape;
  const Tape::Id in = tape.leaf(h_fake, false);
  const Tape::Id probs = server_forward(tape, result.shadow.model, in);
  const Tape::Id target = tape.leaf(final_probs, false);
  result.loss_history.push_back(
      tape.value(tape.mse(probs, target)).scalar_value());
  return result;
}

DenseMatrix add_noise(const ShadowServer& shadow,
                      const DenseMatrix& h_fake_row, int attack_label,
                      double eps) {
  if (eps < 0.0 || eps > 1.0)
    throw std::invalid_argument("add_noise: eps must be in [0,1]");
  if (h_fake_row.rows() != 1)
    throw std::invalid_argument("add_noise: expected a single row");
  if (attack_label < 0 || attack_label >= shadow.model.num_classes())
    throw std::out_of_range("add_noise: attack label out of range");

  Tape tape;
  const Tape::Id row = tape.leaf(h_fake_row, true);
  const Tape::Id probs = server_forward(tape, shadow.model, row);
  const Tape::Id loss = tape.cross_entropy(probs, {attack_label}, {0});
  tape.backward(loss);
  const DenseMatrix g = tape.gradient(row);
  DenseMatrix out = h_fake_row;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] += eps * sign_of(g.data()[i]);
  return out;
}

std::vector<NodePair> make_candidates(int n, int v_t, CandidateMode mode) {
  std::vector<NodePair> out;
  if (mode == CandidateMode::kTargetIncident) {
    out.reserve(static_cast<std::size_t>(n) - 1);
    for (int u = 0; u < n; ++u)
      if (u != v_t) out.emplace_back(v_t, u);
  } else {
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) out.emplace_back(u, v);
  }
  return out;
}

namespace {

double guidance_loss(const LocalModel& model, const SparseSymMatrix& adj,
                     const DenseMatrix& features, int v_t,
                     const DenseMatrix& guidance) {
  const DenseMatrix emb = forward(model, adj, features);
  double acc = 0.0;
  for (int c = 0; c < emb.cols(); ++c) {
    const double diff = emb(v_t, c) - guidance(0, c);
    acc += diff * diff;
  }
  return acc / static_cast<double>(emb.cols());
}

}  // namespace

SelectResult select_edges(const LocalModel& model,
                          const SparseSymMatrix& adjacency,
                          const DenseMatrix& features, int v_t,
                          const DenseMatrix& guidance, int delta,
                          std::span<const NodePair> candidates) {
  if (guidance.rows() != 1 || guidance.cols() != model.embed_dim())
    throw std::invalid_argument("select_edges: guidance must be 1 x d");
  if (delta < 1) throw std::invalid_argument("select_edges: delta must be >= 1");
  if (candidates.empty())
    throw std::invalid_argument("select_edges: empty candidate set");
  if (static_cast<std::size_t>(delta) > candidates.size())
    throw std::invalid_argument("select_edges: delta exceeds candidate count");

  SelectResult result;
  result.adversarial = adjacency;
  std::set<NodePair> flipped;

  const EmbeddingLoss loss = [&](Tape& tape, Tape::Id emb) {
    const Tape::Id row = tape.gather_rows(emb, {v_t});
    const Tape::Id target = tape.leaf(guidance, false);
    return tape.mse(row, target);
  };

  for (int step = 0; step < delta; ++step) {
    std::vector<NodePair> remaining;
    remaining.reserve(candidates.size());
    for (const NodePair& p : candidates)
      if (!flipped.contains(p)) remaining.push_back(p);

    result.lt_history.push_back(
        guidance_loss(model, result.adversarial, features, v_t, guidance));
    const std::vector<PairGradient> grads = grad_wrt_adjacency(
        model, result.adversarial, features, loss, remaining);

    // argmax of -g_sym; exact ties resolve to the smallest pair.
    const PairGradient* best = &grads.front();
    for (const PairGradient& g : grads) {
      if (g.sym() < best->sym() ||
          (g.sym() == best->sym() && g.pair < best->pair))
        best = &g;
    }
    result.adversarial.toggle_edge(best->pair.u, best->pair.v);
    result.flips.push_back(best->pair);
    flipped.insert(best->pair);
  }
  result.lt_history.push_back(
      guidance_loss(model, result.adversarial, features, v_t, guidance));
  return result;
}

AttackRun run_attack(const GvflSystem& system, int malicious_idx,
                     std::span<const int> targets, SeededRng& rng,
                     const FraudsterOptions& opts) {
  if (!system.trained) throw std::logic_error("run_attack: untrained system");
  if (malicious_idx < 0 || malicious_idx >= system.k())
    throw std::out_of_range("run_attack: malicious index out of range");

  const Participant& mal =
      system.participants[static_cast<std::size_t>(malicious_idx)];
  const DenseMatrix h_m = forward(mal.model, mal.edges, mal.features);
  const ProbabilityApi api = system.api();
  const DenseMatrix& p_final = system.final_probs;

  AttackRun run;
  run.eps = opts.eps;
  run.delta = opts.delta;
  run.malicious = malicious_idx;

  SeededRng steal_rng = rng.split(1);
  StealResult stolen = steal_embeddings(api, h_m, malicious_idx, system.k(),
                                        p_final, steal_rng, opts.steal);
  run.grn_loss = stolen.loss_history;

  SeededRng shadow_rng = rng.split(2);
  ShadowOptions shadow_opts = opts.shadow;
  shadow_opts.hidden = system.config.server_hidden;
  ShadowResult shadow =
      train_shadow(stolen.h_fake, p_final, shadow_rng, shadow_opts);
  run.shadow_loss = shadow.loss_history;

  {
    const DenseMatrix real = api.predict(stolen.h_fake);
    const DenseMatrix fake = shadow.shadow.model.predict_probs(stolen.h_fake);
    int agree = 0;
    for (int r = 0; r < real.rows(); ++r)
      agree += argmax_row(real, r) == argmax_row(fake, r);
    run.shadow_agreement = static_cast<double>(agree) / real.rows();
  }

  const int d = system.config.embed_dim;
  int successes = 0;
  for (int v_t : targets) {
    TargetOutcome outcome;
    outcome.node = v_t;
    outcome.clean_pred = argmax_row(p_final, v_t);
    outcome.attack_label = outcome.clean_pred;
    const int y = system.labels[static_cast<std::size_t>(v_t)];
    outcome.margin_before = margin_row(p_final, v_t, y);

    DenseMatrix fake_row(1, stolen.h_fake.cols());
    for (int c = 0; c < stolen.h_fake.cols(); ++c)
      fake_row(0, c) = stolen.h_fake(v_t, c);
    const DenseMatrix noised =
        add_noise(shadow.shadow, fake_row, outcome.attack_label, opts.eps);
    const DenseMatrix guidance =
        slice_cols(noised, malicious_idx * d, (malicious_idx + 1) * d);

    const std::vector<NodePair> candidates =
        make_candidates(mal.edges.n(), v_t, opts.candidates);
    SelectResult sel = select_edges(mal.model, mal.edges, mal.features, v_t,
                                    guidance, opts.delta, candidates);
    outcome.flips = sel.flips;
    outcome.lt_history = sel.lt_history;

    const DenseMatrix adv_emb = forward(mal.model, sel.adversarial, mal.features);
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
