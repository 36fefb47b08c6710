#include "gvfl/federation.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "gvfl/io_util.hpp"

namespace gvfl {

namespace {

constexpr std::uint64_t kServerStream = 0x01;
constexpr std::uint64_t kParticipantStreamBase = 0x10;
constexpr std::uint64_t kDefenseStream = 0xD0;
constexpr std::uint64_t kTrainingDefenseTag = 0;
constexpr std::uint64_t kInferenceDefenseTag = 1;
constexpr std::uint64_t kOverrideDefenseTag = 2;

DenseMatrix defended_upload(const DefenseConfig& cfg, const DenseMatrix& raw,
                            SeededRng& rng) {
  switch (cfg.kind) {
    case DefenseKind::kNone: return raw;
    case DefenseKind::kDp: return dp_perturb(raw, cfg.beta, rng);
    case DefenseKind::kTopK: return topk_filter(raw, cfg.k, cfg.topk_by_abs);
  }
  return raw;
}

}  // namespace

ServerModel ServerModel::init(int input_dim, const std::vector<int>& hidden,
                              int num_classes, SeededRng& rng) {
  ServerModel s;
  int in = input_dim;
  for (int h : hidden) {
    s.weights.push_back(DenseMatrix::glorot(in, h, rng));
    in = h;
  }
  s.weights.push_back(DenseMatrix::glorot(in, num_classes, rng));
  return s;
}

DenseMatrix ServerModel::predict_probs(const DenseMatrix& h_global) const {
  if (h_global.cols() != input_dim())
    throw std::invalid_argument("predict: embedding width mismatch");
  DenseMatrix z = h_global;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i)
    z = relu(matmul(z, weights[i]));
  return row_softmax(matmul(z, weights.back()));
}

Tape::Id server_forward(Tape& tape, const ServerModel& server, Tape::Id h,
                        std::vector<Tape::Id>* weight_leaves) {
  Tape::Id z = h;
  for (std::size_t i = 0; i < server.weights.size(); ++i) {
    const Tape::Id w = tape.leaf(server.weights[i], weight_leaves != nullptr);
    if (weight_leaves) weight_leaves->push_back(w);
    z = tape.matmul(z, w);
    if (i + 1 < server.weights.size()) z = tape.relu(z);
  }
  return tape.row_softmax(z);
}

DenseMatrix ProbabilityApi::predict(const DenseMatrix& h_global) const {
  return server_.predict_probs(h_global);
}

ProbabilityApi GvflSystem::api() const {
  if (!trained) throw std::logic_error("api: system is not trained");
  return ProbabilityApi(server);
}

GvflSystem build_system(const Graph& g, const VerticalPartition& part,
                        const SplitSpec& split, ModelKind kind,
                        const TrainConfig& cfg, SeededRng& rng) {
  GvflSystem sys;
  sys.split = split;
  sys.config = cfg;
  sys.labels = g.labels;
  sys.num_classes = g.num_classes;
  for (int p = 0; p < part.k; ++p) {
    Participant pa;
    pa.features = part.shard_features(g, p);
    pa.edges = part.edge_shards[static_cast<std::size_t>(p)];
    pa.feature_columns = part.feature_columns[static_cast<std::size_t>(p)];
    SeededRng init_rng = rng.split(kParticipantStreamBase + static_cast<std::uint64_t>(p));
    pa.model = LocalModel::init(kind, pa.features.cols(), cfg.hidden_dim,
                                cfg.embed_dim, init_rng);
    sys.participants.push_back(std::move(pa));
  }
  SeededRng server_rng = rng.split(kServerStream);
  sys.server = ServerModel::init(part.k * cfg.embed_dim, cfg.server_hidden,
                                 g.num_classes, server_rng);
  return sys;
}

DenseMatrix concat_embeddings(std::span<const DenseMatrix> parts) {
  if (parts.size() < 2)
    throw std::invalid_argument("concat_embeddings: need at least 2 parts");
  return concat_cols(parts);
}

DenseMatrix apply_defense(const GvflSystem& system, int participant,
                          const DenseMatrix& raw, std::uint64_t tag) {
  const DefenseConfig& cfg = system.config.defense;
  if (cfg.kind == DefenseKind::kNone) return raw;
  SeededRng rng(system.defense_seed,
                tag * 1000 + static_cast<std::uint64_t>(participant));
  return defended_upload(cfg, raw, rng);
}

void train(GvflSystem& system, SeededRng& rng) {
  if (system.split.train.empty())
    throw std::invalid_argument("train: empty train split");
  const int k = system.k();
  SeededRng defense_rng = rng.split(kDefenseStream);
  system.defense_seed = defense_rng.next_u64();
  const DefenseConfig& defense = system.config.defense;

  AdamOptimizer::Config adam_cfg;
  adam_cfg.lr = system.config.lr;
  AdamOptimizer server_adam(adam_cfg);
  std::vector<AdamOptimizer> local_adams(static_cast<std::size_t>(k),
                                         AdamOptimizer(adam_cfg));
  system.train_loss.clear();
  system.train_loss.reserve(static_cast<std::size_t>(system.config.epochs));

  for (int epoch = 0; epoch < system.config.epochs; ++epoch) {
    // Participant side: forward passes, one tape each.
    std::vector<Tape> tapes(static_cast<std::size_t>(k));
    std::vector<ForwardHandles> handles(static_cast<std::size_t>(k));
    for (int p = 0; p < k; ++p) {
      Participant& pa = system.participants[static_cast<std::size_t>(p)];
      ForwardOptions opts;
      opts.train_params = true;
      handles[static_cast<std::size_t>(p)] = build_forward(
          tapes[static_cast<std::size_t>(p)], pa.model, pa.edges, pa.features, opts);
    }

    // Server side: defended uploads, classify, split the gradient.
    Tape st;
    std::vector<Tape::Id> upload_ids;
    std::vector<Tape::Id> defended_ids;
    SeededRng epoch_defense = SeededRng(
        system.defense_seed, kTrainingDefenseTag * 1000000 +
                                 static_cast<std::uint64_t>(epoch));
    for (int p = 0; p < k; ++p) {
      const DenseMatrix& emb = tapes[static_cast<std::size_t>(p)].value(
          handles[static_cast<std::size_t>(p)].embedding);
      const Tape::Id up = st.leaf(emb, true);
      upload_ids.push_back(up);
      Tape::Id def = up;
      if (defense.kind != DefenseKind::kNone && defense.during_training) {
        if (defense.kind == DefenseKind::kDp) {
          DenseMatrix noise(emb.rows(), emb.cols());
          for (std::size_t i = 0; i < noise.size(); ++i)
            noise.data()[i] = epoch_defense.laplace(defense.beta);
          def = st.add(up, st.leaf(noise, false));
        } else {
          def = st.hadamard(
              up, st.leaf(topk_mask(emb, defense.k, defense.topk_by_abs), false));
        }
      }
      defended_ids.push_back(def);
    }
    const Tape::Id hg = st.concat_cols(defended_ids);
    std::vector<Tape::Id> weight_ids;
    const Tape::Id probs = server_forward(st, system.server, hg, &weight_ids);
    const Tape::Id loss = st.cross_entropy(probs, system.labels, system.split.train);
    const double loss_value = st.value(loss).scalar_value();
    if (!std::isfinite(loss_value)) throw TrainingDiverged(epoch);
    system.train_loss.push_back(loss_value);
    st.backward(loss);

    std::vector<DenseMatrix> wgrads;
    std::vector<DenseMatrix*> wparams;
    std::vector<const DenseMatrix*> wgrad_ptrs;
    wgrads.reserve(weight_ids.size());
    for (std::size_t i = 0; i < weight_ids.size(); ++i) {
      wgrads.push_back(st.gradient(weight_ids[i]));
      wparams.push_back(&system.server.weights[i]);
    }
    for (const DenseMatrix& g : wgrads) wgrad_ptrs.push_back(&g);
    server_adam.step(wparams, wgrad_ptrs);

    // Gradient slices return to the participants.
    for (int p = 0; p < k; ++p) {
      const DenseMatrix upstream = st.gradient(upload_ids[static_cast<std::size_t>(p)]);
      Tape& pt = tapes[static_cast<std::size_t>(p)];
      const ForwardHandles& h = handles[static_cast<std::size_t>(p)];
      pt.backward_seeded(h.embedding, upstream);
      Participant& pa = system.participants[static_cast<std::size_t>(p)];
      const DenseMatrix g0 = pt.gradient(h.w0);
      const DenseMatrix g1 = pt.gradient(h.w1);
      local_adams[static_cast<std::size_t>(p)].step({&pa.model.w0, &pa.model.w1},
                                                    {&g0, &g1});
    }
  }

  // Freeze the inference-time view: defended uploads and P on all nodes.
  system.uploads.clear();
  for (int p = 0; p < k; ++p) {
    Participant& pa = system.participants[static_cast<std::size_t>(p)];
    DenseMatrix raw = forward(pa.model, pa.edges, pa.features);
    SeededRng up_rng(system.defense_seed,
                     kInferenceDefenseTag * 1000 + static_cast<std::uint64_t>(p));
    system.uploads.push_back(defended_upload(defense, raw, up_rng));
  }
  system.final_probs = system.server.predict_probs(concat_cols(system.uploads));
  system.trained = true;
}

DenseMatrix system_probs(const GvflSystem& system,
                         std::span<const EmbeddingOverride> overrides) {
  if (!system.trained) throw std::logic_error("system is not trained");
  if (overrides.empty())
    return system.server.predict_probs(concat_cols(system.uploads));
  std::vector<DenseMatrix> ups = system.uploads;
  for (const EmbeddingOverride& o : overrides) {
    if (o.participant < 0 || o.participant >= system.k())
      throw std::out_of_range("override participant out of range");
    SeededRng rng(system.defense_seed,
                  kOverrideDefenseTag * 1000 +
                      static_cast<std::uint64_t>(o.participant));
    ups[static_cast<std::size_t>(o.participant)] =
        defended_upload(system.config.defense, o.embedding, rng);
  }
  return system.server.predict_probs(concat_cols(ups));
}

double accuracy(const GvflSystem& system, std::span<const int> nodes,
                std::span<const EmbeddingOverride> overrides) {
  if (nodes.empty()) throw std::invalid_argument("accuracy: empty node set");
  const DenseMatrix probs = system_probs(system, overrides);
  int correct = 0;
  for (int v : nodes) {
    const int y = system.labels[static_cast<std::size_t>(v)];
    bool strict_max = true;
    for (int c = 0; c < probs.cols(); ++c)
      if (c != y && probs(v, c) >= probs(v, y)) {
        strict_max = false;
        break;
      }
    correct += strict_max;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

std::vector<double> contribution(const GvflSystem& system) {
  if (!system.trained) throw std::logic_error("system is not trained");
  const int k = system.k();
  const int d = system.config.embed_dim;
  std::vector<double> acc(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    std::vector<DenseMatrix> ups;
    for (int p = 0; p < k; ++p)
      ups.push_back(p == i ? system.uploads[static_cast<std::size_t>(p)]
                           : DenseMatrix(system.n(), d));
    const DenseMatrix probs = system.server.predict_probs(concat_cols(ups));
    int correct = 0;
    for (int v : system.split.test) {
      const int y = system.labels[static_cast<std::size_t>(v)];
      bool strict_max = true;
      for (int c = 0; c < probs.cols(); ++c)
        if (c != y && probs(v, c) >= probs(v, y)) {
          strict_max = false;
          break;
        }
      correct += strict_max;
    }
    acc[static_cast<std::size_t>(i)] =
        static_cast<double>(correct) /
        static_cast<double>(system.split.test.size());
  }
  double total = 0.0;
  for (double a : acc) total += a;
  if (total == 0.0)
    throw std::runtime_error("contribution: all participants score zero");
  for (double& a : acc) a /= total;
  return acc;
}

void save_system(const GvflSystem& system, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["participants"] = system.k();
  manifest["embed_dim"] = system.config.embed_dim;
  manifest["num_classes"] = system.num_classes;
  manifest["server_layers"] = system.server.weights.size();
  for (std::size_t i = 0; i < system.server.weights.size(); ++i) {
    const auto& w = system.server.weights[i];
    manifest["server_shapes"].push_back({w.rows(), w.cols()});
    write_matrix_csv(dir / ("server_w" + std::to_string(i) + ".csv"), w);
  }
  atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  for (int p = 0; p < system.k(); ++p)
    save_model(system.participants[static_cast<std::size_t>(p)].model,
               dir / ("participant_" + std::to_string(p)));
}

}  // namespace gvfl
