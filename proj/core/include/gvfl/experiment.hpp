#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gvfl/baselines.hpp"
#include "gvfl/fraudster.hpp"
#include "gvfl/metrics.hpp"

namespace gvfl {

struct DatasetSpec {
  enum class Kind { kDir, kSynthSbm };
  Kind kind = Kind::kDir;
  std::string name = "dataset";
  std::filesystem::path dir;  // converted edges.tsv/features.csv/labels.csv
  // synth_sbm parameters:
  std::vector<int> blocks = {20, 20};
  double intra_p = 0.9;
  double inter_p = 0.02;
  int feat_dim = 8;
  std::uint64_t synth_seed = 42;
};

struct SplitConfig {
  int per_class_train = 20;
  int val_size = 500;
  int test_size = 1000;
};

struct AttackSpec {
  std::string method = "none";  // none | fraudster | rnd | fga
  double eps = 0.01;
  int delta = 1;
  int grn_iters = 200;
  int shadow_iters = 200;
  int surrogate_epochs = 200;
  int malicious = 0;
  int targets_high = 20;
  int targets_low = 20;
  int targets_random = 60;
};

/// One experiment: dataset x model x partition x seeds, with optional attack
/// and defense. Serialized as JSON (schema_version 1); see the README for
/// the documented schema.
struct ExperimentConfig {
  int schema_version = 1;
  DatasetSpec dataset;
  std::string model = "gcn";
  int participants = 2;
  std::string partition_mode = "dual";  // dual | feature_only
  std::vector<std::uint64_t> seeds = {1};
  TrainConfig train;
  SplitConfig split;
  AttackSpec attack;
  std::filesystem::path out = "results";
  int jobs = 1;
};

ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json_text(const std::string& text);

/// Throws std::invalid_argument on any inconsistent field; run_scenario
/// validates before touching the output directory.
void validate_config(const ExperimentConfig& cfg);

/// Resolves the dataset directory against GVFL_DATA_DIR when the configured
/// path does not exist as given.
std::filesystem::path resolve_dataset_dir(const std::filesystem::path& dir);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double clean_test_accuracy = 0.0;
  std::vector<double> train_loss;
  std::vector<double> contributions;
  std::optional<AttackRun> attack;
};

struct ScenarioResult {
  std::vector<SeedOutcome> outcomes;   // seed order
  std::vector<RunRecord> records;      // clean + attack rows per seed
  std::vector<AggregateRow> aggregate_rows;
};

Graph load_dataset(const DatasetSpec& spec);

/// One seed of the configured pipeline: partition -> split -> train ->
/// (attack). Pure function of (config, graph, seed).
SeedOutcome run_seed(const ExperimentConfig& cfg, const Graph& g,
                     std::uint64_t seed);

/// Full scenario: every seed (bounded worker pool), one JSON per seed plus
/// aggregate.csv and a config echo under cfg.out. Output bytes depend only
/// on the config.
ScenarioResult run_scenario(const ExperimentConfig& cfg);

/// Serialized outcome as written to <out>/seed_<seed>.json.
std::string seed_outcome_json(const ExperimentConfig& cfg,
                              const SeedOutcome& outcome);

/// Re-aggregates the per-seed JSON files in a scenario output directory;
/// byte-identical to the aggregate.csv run_scenario wrote.
std::string reaggregate_directory(const std::filesystem::path& dir);

/// Runs run_scenario once per value of the axis (eps | d | k | beta | K),
/// each into <out>/<axis>_<value>/, and writes <out>/sweep.csv.
std::vector<AggregateRow> sweep(const ExperimentConfig& cfg,
                                const std::string& axis,
                                const std::vector<double>& values);

/// Bounded worker pool; rethrows the first exception after joining.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace gvfl
