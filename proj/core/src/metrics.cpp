#include "gvfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gvfl/io_util.hpp"

namespace gvfl {

double classification_margin(std::span<const double> prob_row, int true_class) {
  if (true_class < 0 || true_class >= static_cast<int>(prob_row.size()))
    throw std::out_of_range("classification_margin: class out of range");
  double other = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(prob_row.size()); ++c)
    if (c != true_class)
      other = std::max(other, prob_row[static_cast<std::size_t>(c)]);
  return prob_row[static_cast<std::size_t>(true_class)] - other;
}

MarginRecord margin_record(const GvflSystem& system, int node) {
  MarginRecord rec;
  rec.node = node;
  rec.true_class = system.labels[static_cast<std::size_t>(node)];
  rec.probs.assign(system.final_probs.row(node).begin(),
                   system.final_probs.row(node).end());
  rec.margin = classification_margin(rec.probs, rec.true_class);
  return rec;
}

std::vector<int> TargetSelection::all() const {
  std::vector<int> out = highest;
  out.insert(out.end(), lowest.begin(), lowest.end());
  out.insert(out.end(), random.begin(), random.end());
  return out;
}

TargetSelection select_targets(const GvflSystem& system,
                               std::span<const int> test_nodes, SeededRng& rng,
                               int high, int low, int rand) {
  if (!system.trained) throw std::logic_error("select_targets: untrained");
  struct Scored {
    int node;
    double margin;
  };
  std::vector<Scored> correct;
  for (int v : test_nodes) {
    const double m = classification_margin(
        system.final_probs.row(v), system.labels[static_cast<std::size_t>(v)]);
    if (m > 0.0) correct.push_back({v, m});
  }

  TargetSelection sel;
  const int want = high + low + rand;
  if (static_cast<int>(correct.size()) < want) {
    // Not enough correctly classified nodes: shrink 1:1:3 proportionally.
    sel.shrunk = true;
    const double ratio =
        static_cast<double>(correct.size()) / static_cast<double>(want);
    high = static_cast<int>(std::floor(high * ratio));
    low = static_cast<int>(std::floor(low * ratio));
    rand = static_cast<int>(correct.size()) - high - low;
  }

  // Highest margins first; ties by node id.
  std::sort(correct.begin(), correct.end(), [](const Scored& a, const Scored& b) {
    return a.margin != b.margin ? a.margin > b.margin : a.node < b.node;
  });
  for (int i = 0; i < high; ++i)
    sel.highest.push_back(correct[static_cast<std::size_t>(i)].node);
  for (int i = 0; i < low; ++i)
    sel.lowest.push_back(
        correct[correct.size() - 1 - static_cast<std::size_t>(i)].node);

  std::vector<int> middle;
  for (std::size_t i = static_cast<std::size_t>(high);
       i < correct.size() - static_cast<std::size_t>(low); ++i)
    middle.push_back(correct[i].node);
  rng.shuffle(middle);
  sel.random.assign(middle.begin(), middle.begin() + rand);
  std::sort(sel.random.begin(), sel.random.end());
  return sel;
}

std::vector<AggregateRow> aggregate(std::span<const RunRecord> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<double>>
      groups;
  for (const RunRecord& r : runs)
    groups[{r.dataset, r.model, r.method}].push_back(r.accuracy);

  std::vector<AggregateRow> rows;
  for (const auto& [key, values] : groups) {
    AggregateRow row;
    std::tie(row.dataset, row.model, row.method) = key;
    row.runs = static_cast<int>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    row.mean = mean;
    row.stddev = std::sqrt(var);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string aggregate_csv(std::span<const AggregateRow> rows) {
  std::string out = "dataset,model,method,mean,std,runs\n";
  for (const AggregateRow& r : rows) {
    out += r.dataset + ',' + r.model + ',' + r.method + ',' +
           format_double(r.mean) + ',' + format_double(r.stddev) + ',' +
           std::to_string(r.runs) + '\n';
  }
  return out;
}

void export_embeddings(const GvflSystem& system,
                       const std::filesystem::path& path,
                       const DenseMatrix* adversarial) {
  if (!system.trained) throw std::logic_error("export_embeddings: untrained");
  const DenseMatrix clean = concat_cols(system.uploads);
  if (adversarial && !adversarial->same_shape(clean))
    throw std::invalid_argument("export_embeddings: adversarial shape mismatch");

  std::string out = "node_id,label,adversarial";
  for (int c = 0; c < clean.cols(); ++c) out += ",e" + std::to_string(c);
  out += '\n';
  const auto emit = [&](const DenseMatrix& m, int flag) {
    for (int r = 0; r < m.rows(); ++r) {
      out += std::to_string(r) + ',' +
             std::to_string(system.labels[static_cast<std::size_t>(r)]) + ',' +
             std::to_string(flag);
      for (int c = 0; c < m.cols(); ++c) out += ',' + format_double(m(r, c));
      out += '\n';
    }
  };
  emit(clean, 0);
  if (adversarial) emit(*adversarial, 1);
  atomic_write_text(path, out);
}

}  // namespace gvfl
