#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gvfl/federation.hpp"

namespace gvfl {

/// p_true - max_{c != true} p_c; positive exactly when the node is correctly
/// classified with a unique argmax.
double classification_margin(std::span<const double> prob_row, int true_class);

struct MarginRecord {
  int node;
  int true_class;
  std::vector<double> probs;
  double margin;
};

MarginRecord margin_record(const GvflSystem& system, int node);

/// Attack target protocol: from the correctly classified test nodes, the
/// `high` highest-margin, the `low` lowest-margin-but-correct, and `rand`
/// random others. Groups are disjoint; ties resolve by node id. If fewer
/// correct nodes exist than requested the groups shrink proportionally.
struct TargetSelection {
  std::vector<int> highest;
  std::vector<int> lowest;
  std::vector<int> random;
  bool shrunk = false;

  std::vector<int> all() const;
};

TargetSelection select_targets(const GvflSystem& system,
                               std::span<const int> test_nodes, SeededRng& rng,
                               int high = 20, int low = 20, int rand = 60);

/// One scenario result; the unit aggregate() groups.
struct RunRecord {
  std::string dataset;
  std::string model;
  std::string method;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

struct AggregateRow {
  std::string dataset;
  std::string model;
  std::string method;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  int runs = 0;
};

/// Mean +- population std per (dataset, model, method), rows sorted by key.
std::vector<AggregateRow> aggregate(std::span<const RunRecord> runs);

std::string aggregate_csv(std::span<const AggregateRow> rows);

/// CSV export of global embeddings for external projection tooling: columns
/// node_id, label, adversarial flag, e0..e_{Kd-1}. With an adversarial
/// matrix the file holds 2n rows, clean first.
void export_embeddings(const GvflSystem& system,
                       const std::filesystem::path& path,
                       const DenseMatrix* adversarial = nullptr);

}  // namespace gvfl
