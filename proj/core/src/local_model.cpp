#include "gvfl/local_model.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "gvfl/io_util.hpp"

namespace gvfl {

const char* to_string(ModelKind kind) {
  return kind == ModelKind::kGcn ? "gcn" : "sgc";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gcn") return ModelKind::kGcn;
  if (s == "sgc") return ModelKind::kSgc;
  throw std::invalid_argument("unknown model kind: " + s);
}

LocalModel LocalModel::init(ModelKind kind, int in_dim, int hidden,
                            int embed_dim, SeededRng& rng) {
  LocalModel m;
  m.kind = kind;
  m.w0 = DenseMatrix::glorot(in_dim, hidden, rng);
  m.w1 = DenseMatrix::glorot(hidden, embed_dim, rng);
  return m;
}

ForwardHandles build_forward(Tape& tape, const LocalModel& model,
                             const SparseSymMatrix& adjacency,
                             const DenseMatrix& features,
                             const ForwardOptions& opts) {
  if (features.cols() != model.input_dim())
    throw std::invalid_argument("forward: feature width does not match W0");
  if (features.rows() != adjacency.n())
    throw std::invalid_argument("forward: feature rows do not match n");

  ForwardHandles h;
  h.adj = tape.adjacency(adjacency, opts.adjacency_grad);
  const Tape::Id norm = tape.normalize(h.adj);
  const Tape::Id x = tape.leaf(features, false);
  h.w0 = tape.leaf(model.w0, opts.train_params);
  h.w1 = tape.leaf(model.w1, opts.train_params);

  if (model.kind == ModelKind::kGcn) {
    const Tape::Id z1 = tape.spmm(norm, tape.matmul(x, h.w0));
    const Tape::Id h1 = tape.relu(z1);
    h.embedding = tape.spmm(norm, tape.matmul(h1, h.w1));
  } else {
    const Tape::Id t = tape.matmul(tape.matmul(x, h.w0), h.w1);
    h.embedding = tape.spmm(norm, tape.spmm(norm, t));
  }
  return h;
}

DenseMatrix forward(const LocalModel& model, const SparseSymMatrix& adjacency,
                    const DenseMatrix& features) {
  Tape tape;
  const ForwardHandles h = build_forward(tape, model, adjacency, features);
  return tape.value(h.embedding);
}

std::vector<PairGradient> grad_wrt_adjacency(
    const LocalModel& model, const SparseSymMatrix& adjacency,
    const DenseMatrix& features, const EmbeddingLoss& loss,
    std::span<const NodePair> candidates) {
  Tape tape;
  ForwardOptions opts;
  opts.adjacency_grad = true;
  const ForwardHandles h = build_forward(tape, model, adjacency, features, opts);
  tape.declare_candidates(h.adj, candidates);
  const Tape::Id l = loss(tape, h.embedding);
  tape.backward(l);
  return tape.pair_gradients(h.adj);
}

void local_step(LocalModel& model, const SparseSymMatrix& adjacency,
                const DenseMatrix& features, const DenseMatrix& upstream_grad,
                AdamOptimizer& adam) {
  Tape tape;
  ForwardOptions opts;
  opts.train_params = true;
  const ForwardHandles h = build_forward(tape, model, adjacency, features, opts);
  if (!tape.value(h.embedding).same_shape(upstream_grad))
    throw std::invalid_argument("local_step: upstream gradient shape mismatch");
  tape.backward_seeded(h.embedding, upstream_grad);
  const DenseMatrix g0 = tape.gradient(h.w0);
  const DenseMatrix g1 = tape.gradient(h.w1);
  adam.step({&model.w0, &model.w1}, {&g0, &g1});
}

void save_model(const LocalModel& model, const std::filesystem::path& base) {
  nlohmann::json header;
  header["kind"] = to_string(model.kind);
  header["w0"] = {model.w0.rows(), model.w0.cols()};
  header["w1"] = {model.w1.rows(), model.w1.cols()};
  atomic_write_text(base.string() + ".json", header.dump(2) + "\n");
  write_matrix_csv(base.string() + "_w0.csv", model.w0);
  write_matrix_csv(base.string() + "_w1.csv", model.w1);
}

LocalModel load_model(const std::filesystem::path& base) {
  std::ifstream f(base.string() + ".json");
  if (!f) throw std::runtime_error("cannot open " + base.string() + ".json");
  nlohmann::json header = nlohmann::json::parse(f);
  LocalModel m;
  m.kind = model_kind_from_string(header.at("kind").get<std::string>());
  m.w0 = read_matrix_csv(base.string() + "_w0.csv");
  m.w1 = read_matrix_csv(base.string() + "_w1.csv");
  const auto s0 = header.at("w0");
  const auto s1 = header.at("w1");
  if (m.w0.rows() != s0[0].get<int>() || m.w0.cols() != s0[1].get<int>() ||
      m.w1.rows() != s1[0].get<int>() || m.w1.cols() != s1[1].get<int>())
    throw std::runtime_error("checkpoint shape header mismatch");
  return m;
}

}  // namespace gvfl
