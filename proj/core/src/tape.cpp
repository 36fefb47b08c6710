#include "gvfl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gvfl {

namespace {

std::uint64_t pair_key(int u, int v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

double row_dot(const DenseMatrix& a, int ra, const DenseMatrix& b, int rb) {
  const double* pa = a.data() + static_cast<std::size_t>(ra) * a.cols();
  const double* pb = b.data() + static_cast<std::size_t>(rb) * b.cols();
  double acc = 0.0;
  for (int j = 0; j < a.cols(); ++j) acc += pa[j] * pb[j];
  return acc;
}

void axpy_row(DenseMatrix& dst, int rd, double alpha, const DenseMatrix& src,
              int rs) {
  double* pd = dst.data() + static_cast<std::size_t>(rd) * dst.cols();
  const double* ps = src.data() + static_cast<std::size_t>(rs) * src.cols();
  for (int j = 0; j < dst.cols(); ++j) pd[j] += alpha * ps[j];
}

constexpr double kSparseLhsDensityCutoff = 0.15;

}  // namespace

Tape::Id Tape::push(Node n) {
  eval(n);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

void Tape::check_id(Id id) const {
  if (id < 0 || id >= static_cast<Id>(nodes_.size()))
    throw std::out_of_range("tape node id out of range");
}

const Tape::Node& Tape::at(Id id) const {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)];
}

Tape::Node& Tape::at(Id id) {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)];
}

Tape::Id Tape::leaf(DenseMatrix value, bool trainable) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.trainable = trainable;
  n.needs_grad = trainable;
  return push(std::move(n));
}

Tape::Id Tape::adjacency(SparseSymMatrix raw, bool trainable) {
  Node n;
  n.op = Op::kAdjacency;
  n.trainable = trainable;
  n.needs_grad = trainable;
  n.adj_slot = static_cast<int>(adj_.size());
  adj_.push_back(AdjData{std::move(raw), {}, {}});
  return push(std::move(n));
}

void Tape::update_leaf(Id id, const DenseMatrix& value) {
  Node& n = at(id);
  if (n.op != Op::kLeaf) throw std::invalid_argument("update_leaf: not a leaf");
  if (!n.value.same_shape(value))
    throw std::invalid_argument("update_leaf: shape mismatch");
  n.value = value;
}

Tape::Id Tape::normalize(Id adj) {
  if (at(adj).op != Op::kAdjacency)
    throw std::invalid_argument("normalize: input is not an adjacency leaf");
  Node n;
  n.op = Op::kNormalize;
  n.a = adj;
  n.needs_grad = at(adj).needs_grad;
  n.norm_slot = static_cast<int>(norms_.size());
  norms_.emplace_back();
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::spmm(Id norm_adj, Id dense) {
  if (at(norm_adj).op != Op::kNormalize)
    throw std::invalid_argument("spmm: lhs must be a normalize node");
  Node n;
  n.op = Op::kSpmm;
  n.a = norm_adj;
  n.b = dense;
  n.needs_grad = at(norm_adj).needs_grad || at(dense).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::hadamard(Id a, Id b) {
  Node n;
  n.op = Op::kHadamard;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double s) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.scalar = s;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::concat_cols(std::span<const Id> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  Node n;
  n.op = Op::kConcatCols;
  n.inputs.assign(parts.begin(), parts.end());
  for (Id p : parts) n.needs_grad = n.needs_grad || at(p).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::slice_cols(Id a, int begin, int end) {
  Node n;
  n.op = Op::kSliceCols;
  n.a = a;
  n.ints = {begin, end};
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::gather_rows(Id a, std::vector<int> rows) {
  for (int r : rows)
    if (r < 0 || r >= at(a).value.rows())
      throw std::out_of_range("gather_rows: row index out of range");
  Node n;
  n.op = Op::kGatherRows;
  n.a = a;
  n.ints = std::move(rows);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::row_softmax(Id a) {
  Node n;
  n.op = Op::kRowSoftmax;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::cross_entropy(Id probs, std::vector<int> labels,
                             std::vector<int> mask) {
  const DenseMatrix& p = at(probs).value;
  if (static_cast<int>(labels.size()) != p.rows())
    throw std::invalid_argument("cross_entropy: one label per row required");
  for (int l : mask) {
    if (l < 0 || l >= p.rows())
      throw std::out_of_range("cross_entropy: mask index out of range");
    if (labels[static_cast<std::size_t>(l)] < 0 ||
        labels[static_cast<std::size_t>(l)] >= p.cols())
      throw std::out_of_range("cross_entropy: label out of range");
  }
  Node n;
  n.op = Op::kCrossEntropy;
  n.a = probs;
  n.ints = std::move(labels);
  n.mask = std::move(mask);
  n.needs_grad = at(probs).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::mse(Id a, Id b) {
  if (!at(a).value.same_shape(at(b).value))
    throw std::invalid_argument("mse: shape mismatch");
  Node n;
  n.op = Op::kMse;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

Tape::Id Tape::sum(Id a) {
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

void Tape::eval(Node& n) {
  switch (n.op) {
    case Op::kLeaf:
    case Op::kAdjacency:
      break;
    case Op::kNormalize: {
      const AdjData& ad = adj_[static_cast<std::size_t>(at(n.a).adj_slot)];
      NormData& nd = norms_[static_cast<std::size_t>(n.norm_slot)];
      nd.degrees = ad.raw.degrees_plus_self();
      nd.norm = ad.raw.normalized();
      break;
    }
    case Op::kMatMul: {
      const Node& lhs = at(n.a);
      const DenseMatrix& a = lhs.value;
      const DenseMatrix& b = at(n.b).value;
      n.sparse_lhs.reset();
      if (lhs.op == Op::kLeaf && !lhs.needs_grad && a.size() > 4096) {
        std::size_t nnz = 0;
        for (std::size_t i = 0; i < a.size(); ++i) nnz += a.data()[i] != 0.0;
        if (static_cast<double>(nnz) <
            kSparseLhsDensityCutoff * static_cast<double>(a.size())) {
          SparseOperand sp;
          sp.coords.reserve(nnz);
          sp.values.reserve(nnz);
          for (int r = 0; r < a.rows(); ++r)
            for (int c = 0; c < a.cols(); ++c)
              if (a(r, c) != 0.0) {
                sp.coords.emplace_back(r, c);
                sp.values.push_back(a(r, c));
              }
          n.sparse_lhs = std::move(sp);
        }
      }
      if (n.sparse_lhs) {
        if (a.cols() != b.rows())
          throw std::invalid_argument("matmul: inner dimensions differ");
        DenseMatrix out(a.rows(), b.cols());
        for (std::size_t k = 0; k < n.sparse_lhs->coords.size(); ++k) {
          auto [r, c] = n.sparse_lhs->coords[k];
          axpy_row(out, r, n.sparse_lhs->values[k], b, c);
        }
        n.value = std::move(out);
      } else {
        n.value = gvfl::matmul(a, b);
      }
      break;
    }
    case Op::kSpmm: {
      const NormData& nd =
          norms_[static_cast<std::size_t>(at(n.a).norm_slot)];
      n.value = nd.norm.spmm(at(n.b).value);
      break;
    }
    case Op::kAdd:
      n.value = gvfl::add(at(n.a).value, at(n.b).value);
      break;
    case Op::kSub:
      n.value = gvfl::sub(at(n.a).value, at(n.b).value);
      break;
    case Op::kHadamard:
      n.value = gvfl::hadamard(at(n.a).value, at(n.b).value);
      break;
    case Op::kScale:
      n.value = gvfl::scale(at(n.a).value, n.scalar);
      break;
    case Op::kRelu:
      n.value = gvfl::relu(at(n.a).value);
      break;
    case Op::kConcatCols: {
      std::vector<DenseMatrix> parts;
      parts.reserve(n.inputs.size());
      for (Id p : n.inputs) parts.push_back(at(p).value);
      n.value = gvfl::concat_cols(parts);
      break;
    }
    case Op::kSliceCols:
      n.value = gvfl::slice_cols(at(n.a).value, n.ints[0], n.ints[1]);
      break;
    case Op::kGatherRows: {
      const DenseMatrix& src = at(n.a).value;
      DenseMatrix out(static_cast<int>(n.ints.size()), src.cols());
      for (std::size_t i = 0; i < n.ints.size(); ++i)
        for (int c = 0; c < src.cols(); ++c)
          out(static_cast<int>(i), c) = src(n.ints[i], c);
      n.value = std::move(out);
      break;
    }
    case Op::kRowSoftmax:
      n.value = gvfl::row_softmax(at(n.a).value);
      break;
    case Op::kCrossEntropy: {
      const DenseMatrix& p = at(n.a).value;
      double loss = 0.0;
      for (int l : n.mask)
        loss -= std::log(
            std::max(p(l, n.ints[static_cast<std::size_t>(l)]), 1e-300));
      n.value = DenseMatrix::scalar(loss);
      break;
    }
    case Op::kMse: {
      const DenseMatrix& a = at(n.a).value;
      const DenseMatrix& b = at(n.b).value;
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
      }
      n.value = DenseMatrix::scalar(acc / static_cast<double>(a.size()));
      break;
    }
    case Op::kSum: {
      const DenseMatrix& a = at(n.a).value;
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i];
      n.value = DenseMatrix::scalar(acc);
      break;
    }
  }
}

const DenseMatrix& Tape::value(Id id) const { return at(id).value; }

const SparseSymMatrix& Tape::adjacency_value(Id id) const {
  const Node& n = at(id);
  if (n.op != Op::kAdjacency)
    throw std::invalid_argument("adjacency_value: not an adjacency leaf");
  return adj_[static_cast<std::size_t>(n.adj_slot)].raw;
}

void Tape::recompute() {
  for (Node& n : nodes_) eval(n);
}

void Tape::declare_candidates(Id adj, std::span<const NodePair> pairs) {
  const Node& n = at(adj);
  if (n.op != Op::kAdjacency)
    throw std::invalid_argument("declare_candidates: not an adjacency leaf");
  AdjData& ad = adj_[static_cast<std::size_t>(n.adj_slot)];
  const int nn = ad.raw.n();
  ad.candidates.clear();
  ad.candidates.reserve(pairs.size() * 2);
  for (const NodePair& p : pairs) {
    if (p.u < 0 || p.v >= nn || p.u == p.v)
      throw std::invalid_argument("declare_candidates: bad pair");
    ad.candidates.emplace_back(p.u, p.v);
    ad.candidates.emplace_back(p.v, p.u);
  }
  std::sort(ad.candidates.begin(), ad.candidates.end());
  ad.candidates.erase(
      std::unique(ad.candidates.begin(), ad.candidates.end()),
      ad.candidates.end());
}

DenseMatrix& Tape::grad_buffer(Id id) {
  auto& slot = grads_[static_cast<std::size_t>(id)];
  if (!slot) {
    const DenseMatrix& v = at(id).value;
    slot.emplace(v.rows(), v.cols());
  }
  return *slot;
}

void Tape::backward(Id loss) {
  const DenseMatrix& v = at(loss).value;
  if (v.rows() != 1 || v.cols() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  backward_from(loss, DenseMatrix::scalar(1.0));
}

void Tape::backward_seeded(Id node, const DenseMatrix& seed) {
  if (!at(node).value.same_shape(seed))
    throw std::invalid_argument("backward_seeded: seed shape mismatch");
  backward_from(node, seed);
}

void Tape::backward_from(Id root, const DenseMatrix& seed) {
  if (ran_backward_)
    throw std::logic_error("backward already ran on this tape");
  ran_backward_ = true;
  grads_.assign(nodes_.size(), std::nullopt);
  for (AdjData& ad : adj_) ad.pair_grad.clear();
  for (NormData& nd : norms_) {
    nd.gbar_upper.assign(static_cast<std::size_t>(nd.norm.stored_count()), 0.0);
    nd.gbar_lower.assign(static_cast<std::size_t>(nd.norm.stored_count()), 0.0);
    nd.cand_gbar.clear();
  }
  grads_[static_cast<std::size_t>(root)] = seed;
  for (Id id = root; id >= 0; --id) {
    const Node& n = at(id);
    if (n.op == Op::kNormalize) {
      finalize_adjacency(n);
      continue;
    }
    if (!grads_[static_cast<std::size_t>(id)] || !n.needs_grad) continue;
    backward_node(id);
  }
}

void Tape::backward_node(Id id) {
  const Node& n = at(id);
  const DenseMatrix& dy = *grads_[static_cast<std::size_t>(id)];
  const auto wants = [&](Id in) { return in >= 0 && at(in).needs_grad; };

  switch (n.op) {
    case Op::kLeaf:
    case Op::kAdjacency:
    case Op::kNormalize:
      break;
    case Op::kMatMul: {
      if (n.sparse_lhs) {
        if (wants(n.b)) {
          DenseMatrix& db = grad_buffer(n.b);
          for (std::size_t k = 0; k < n.sparse_lhs->coords.size(); ++k) {
            auto [r, c] = n.sparse_lhs->coords[k];
            axpy_row(db, c, n.sparse_lhs->values[k], dy, r);
          }
        }
        break;
      }
      if (wants(n.a)) {
        DenseMatrix da = matmul_nt(dy, at(n.b).value);
        DenseMatrix& acc = grad_buffer(n.a);
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] += da.data()[i];
      }
      if (wants(n.b)) {
        DenseMatrix db = matmul_tn(at(n.a).value, dy);
        DenseMatrix& acc = grad_buffer(n.b);
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] += db.data()[i];
      }
      break;
    }
    case Op::kSpmm: {
      const Node& norm_node = at(n.a);
      const NormData& nd =
          norms_[static_cast<std::size_t>(norm_node.norm_slot)];
      if (wants(n.b)) {
        DenseMatrix db = nd.norm.spmm(dy);  // N symmetric, so N^T dy = N dy
        DenseMatrix& acc = grad_buffer(n.b);
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] += db.data()[i];
      }
      if (norm_node.needs_grad) {
        NormData& nm = norms_[static_cast<std::size_t>(norm_node.norm_slot)];
        const AdjData& ad =
            adj_[static_cast<std::size_t>(at(norm_node.a).adj_slot)];
        const DenseMatrix& x = at(n.b).value;
        const auto entries = nm.norm.stored();
        for (std::size_t e = 0; e < entries.size(); ++e) {
          const auto& ent = entries[e];
          nm.gbar_upper[e] += row_dot(dy, ent.row, x, ent.col);
          if (ent.row != ent.col)
            nm.gbar_lower[e] += row_dot(dy, ent.col, x, ent.row);
        }
        for (auto [u, v] : ad.candidates)
          nm.cand_gbar[pair_key(u, v)] += row_dot(dy, u, x, v);
      }
      break;
    }
    case Op::kAdd:
      for (Id in : {n.a, n.b}) {
        if (!wants(in)) continue;
        DenseMatrix& acc = grad_buffer(in);
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] += dy.data()[i];
      }
      break;
    case Op::kSub: {
      if (wants(n.a)) {
        DenseMatrix& acc = grad_buffer(n.a);
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] += dy.data()[i];
      }
      if (wants(n.b)) {
        DenseMatrix& acc = grad_buffer(n.b);
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] -= dy.data()[i];
      }
      break;
    }
    case Op::kHadamard: {
      if (wants(n.a)) {
        DenseMatrix& acc = grad_buffer(n.a);
        const DenseMatrix& b = at(n.b).value;
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] += dy.data()[i] * b.data()[i];
      }
      if (wants(n.b)) {
        DenseMatrix& acc = grad_buffer(n.b);
        const DenseMatrix& a = at(n.a).value;
        for (std::size_t i = 0; i < acc.size(); ++i)
          acc.data()[i] += dy.data()[i] * a.data()[i];
      }
      break;
    }
    case Op::kScale: {
      if (!wants(n.a)) break;
      DenseMatrix& acc = grad_buffer(n.a);
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc.data()[i] += n.scalar * dy.data()[i];
      break;
    }
    case Op::kRelu: {
      if (!wants(n.a)) break;
      DenseMatrix& acc = grad_buffer(n.a);
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc.data()[i] += n.value.data()[i] > 0.0 ? dy.data()[i] : 0.0;
      break;
    }
    case Op::kConcatCols: {
      int offset = 0;
      for (Id part : n.inputs) {
        const int pc = at(part).value.cols();
        if (wants(part)) {
          DenseMatrix& acc = grad_buffer(part);
          for (int r = 0; r < dy.rows(); ++r)
            for (int c = 0; c < pc; ++c) acc(r, c) += dy(r, offset + c);
        }
        offset += pc;
      }
      break;
    }
    case Op::kSliceCols: {
      if (!wants(n.a)) break;
      DenseMatrix& acc = grad_buffer(n.a);
      const int begin = n.ints[0];
      for (int r = 0; r < dy.rows(); ++r)
        for (int c = 0; c < dy.cols(); ++c) acc(r, begin + c) += dy(r, c);
      break;
    }
    case Op::kGatherRows: {
      if (!wants(n.a)) break;
      DenseMatrix& acc = grad_buffer(n.a);
      for (std::size_t i = 0; i < n.ints.size(); ++i)
        for (int c = 0; c < dy.cols(); ++c)
          acc(n.ints[i], c) += dy(static_cast<int>(i), c);
      break;
    }
    case Op::kRowSoftmax: {
      if (!wants(n.a)) break;
      DenseMatrix& acc = grad_buffer(n.a);
      const DenseMatrix& p = n.value;
      for (int r = 0; r < p.rows(); ++r) {
        double inner = 0.0;
        for (int c = 0; c < p.cols(); ++c) inner += dy(r, c) * p(r, c);
        for (int c = 0; c < p.cols(); ++c)
          acc(r, c) += p(r, c) * (dy(r, c) - inner);
      }
      break;
    }
    case Op::kCrossEntropy: {
      if (!wants(n.a)) break;
      DenseMatrix& acc = grad_buffer(n.a);
      const DenseMatrix& p = at(n.a).value;
      const double g = dy.scalar_value();
      for (int l : n.mask) {
        const int y = n.ints[static_cast<std::size_t>(l)];
        acc(l, y) -= g / std::max(p(l, y), 1e-300);
      }
      break;
    }
    case Op::kMse: {
      const DenseMatrix& a = at(n.a).value;
      const DenseMatrix& b = at(n.b).value;
      const double g =
          dy.scalar_value() * 2.0 / static_cast<double>(a.size());
      if (wants(n.a)) {
        DenseMatrix& acc = grad_buffer(n.a);
        for (std::size_t i = 0; i < a.size(); ++i)
          acc.data()[i] += g * (a.data()[i] - b.data()[i]);
      }
      if (wants(n.b)) {
        DenseMatrix& acc = grad_buffer(n.b);
        for (std::size_t i = 0; i < a.size(); ++i)
          acc.data()[i] -= g * (a.data()[i] - b.data()[i]);
      }
      break;
    }
    case Op::kSum: {
      if (!wants(n.a)) break;
      DenseMatrix& acc = grad_buffer(n.a);
      const double g = dy.scalar_value();
      for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += g;
      break;
    }
  }
}

void Tape::finalize_adjacency(const Node& norm_node) {
  if (!norm_node.needs_grad) return;
  NormData& nd = norms_[static_cast<std::size_t>(norm_node.norm_slot)];
  AdjData& ad = adj_[static_cast<std::size_t>(at(norm_node.a).adj_slot)];
  if (ad.candidates.empty()) return;

  // s_u collects how the loss reacts to the degree d_u through every
  // normalized entry in row/column u.
  std::vector<double> s(static_cast<std::size_t>(nd.norm.n()), 0.0);
  const auto entries = nd.norm.stored();
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& ent = entries[e];
    const double tu = nd.gbar_upper[e] * ent.value;
    s[static_cast<std::size_t>(ent.row)] += tu;
    s[static_cast<std::size_t>(ent.col)] += tu;
    if (ent.row != ent.col) {
      const double tl = nd.gbar_lower[e] * ent.value;
      s[static_cast<std::size_t>(ent.col)] += tl;
      s[static_cast<std::size_t>(ent.row)] += tl;
    }
  }
  for (auto [u, v] : ad.candidates) {
    const auto it = nd.cand_gbar.find(pair_key(u, v));
    const double gbar = it == nd.cand_gbar.end() ? 0.0 : it->second;
    const double du = nd.degrees[static_cast<std::size_t>(u)];
    const double dv = nd.degrees[static_cast<std::size_t>(v)];
    const double g = gbar / std::sqrt(du * dv) - s[static_cast<std::size_t>(u)] / (2.0 * du);
    ad.pair_grad[pair_key(u, v)] += g;
  }
}

DenseMatrix Tape::gradient(Id id) const {
  check_id(id);
  const auto& slot = grads_[static_cast<std::size_t>(id)];
  if (slot) return *slot;
  const DenseMatrix& v = at(id).value;
  return DenseMatrix(v.rows(), v.cols());
}

PairGradient Tape::pair_gradient(Id adj, NodePair p) const {
  const Node& n = at(adj);
  if (n.op != Op::kAdjacency)
    throw std::invalid_argument("pair_gradient: not an adjacency leaf");
  const AdjData& ad = adj_[static_cast<std::size_t>(n.adj_slot)];
  const auto fw = ad.pair_grad.find(pair_key(p.u, p.v));
  const auto bw = ad.pair_grad.find(pair_key(p.v, p.u));
  if (fw == ad.pair_grad.end() || bw == ad.pair_grad.end())
    throw std::invalid_argument("pair_gradient: pair was not declared");
  return {p, fw->second, bw->second};
}

std::vector<PairGradient> Tape::pair_gradients(Id adj) const {
  const Node& n = at(adj);
  if (n.op != Op::kAdjacency)
    throw std::invalid_argument("pair_gradients: not an adjacency leaf");
  const AdjData& ad = adj_[static_cast<std::size_t>(n.adj_slot)];
  std::vector<PairGradient> out;
  out.reserve(ad.candidates.size() / 2);
  for (auto [u, v] : ad.candidates) {
    if (u > v) continue;
    out.push_back(pair_gradient(static_cast<Id>(adj), NodePair(u, v)));
  }
  return out;
}

}  // namespace gvfl
