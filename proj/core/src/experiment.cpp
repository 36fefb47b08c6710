#include "gvfl/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "gvfl/io_util.hpp"

namespace gvfl {

namespace {

using nlohmann::json;

json dataset_to_json(const DatasetSpec& d) {
  json j;
  j["name"] = d.name;
  if (d.kind == DatasetSpec::Kind::kDir) {
    j["kind"] = "dir";
    j["path"] = d.dir.string();
  } else {
    j["kind"] = "synth_sbm";
    j["blocks"] = d.blocks;
    j["intra_p"] = d.intra_p;
    j["inter_p"] = d.inter_p;
    j["feat_dim"] = d.feat_dim;
    j["synth_seed"] = d.synth_seed;
  }
  return j;
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec d;
  d.name = j.value("name", "dataset");
  const std::string kind = j.value("kind", "dir");
  if (kind == "dir") {
    d.kind = DatasetSpec::Kind::kDir;
    d.dir = j.at("path").get<std::string>();
  } else if (kind == "synth_sbm") {
    d.kind = DatasetSpec::Kind::kSynthSbm;
    d.blocks = j.value("blocks", std::vector<int>{20, 20});
    d.intra_p = j.value("intra_p", 0.9);
    d.inter_p = j.value("inter_p", 0.02);
    d.feat_dim = j.value("feat_dim", 8);
    d.synth_seed = j.value("synth_seed", std::uint64_t{42});
  } else {
    throw std::invalid_argument("dataset.kind must be dir or synth_sbm");
  }
  return d;
}

json defense_to_json(const DefenseConfig& d) {
  json j;
  j["kind"] = to_string(d.kind);
  j["beta"] = d.beta;
  j["k"] = d.k;
  j["during_training"] = d.during_training;
  j["topk_by_abs"] = d.topk_by_abs;
  return j;
}

DefenseConfig defense_from_json(const json& j) {
  DefenseConfig d;
  d.kind = defense_kind_from_string(j.value("kind", "none"));
  d.beta = j.value("beta", 0.1);
  d.k = j.value("k", 16);
  d.during_training = j.value("during_training", true);
  d.topk_by_abs = j.value("topk_by_abs", false);
  return d;
}

std::string method_of(const ExperimentConfig& cfg) {
  return cfg.attack.method;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["dataset"] = dataset_to_json(cfg.dataset);
  j["model"] = cfg.model;
  j["participants"] = cfg.participants;
  j["partition_mode"] = cfg.partition_mode;
  j["seeds"] = cfg.seeds;
  j["train"] = {{"epochs", cfg.train.epochs},
                {"lr", cfg.train.lr},
                {"hidden_dim", cfg.train.hidden_dim},
                {"embed_dim", cfg.train.embed_dim},
                {"server_hidden", cfg.train.server_hidden},
                {"defense", defense_to_json(cfg.train.defense)}};
  j["split"] = {{"per_class_train", cfg.split.per_class_train},
                {"val_size", cfg.split.val_size},
                {"test_size", cfg.split.test_size}};
  j["attack"] = {{"method", cfg.attack.method},
                 {"eps", cfg.attack.eps},
                 {"delta", cfg.attack.delta},
                 {"grn_iters", cfg.attack.grn_iters},
                 {"shadow_iters", cfg.attack.shadow_iters},
                 {"surrogate_epochs", cfg.attack.surrogate_epochs},
                 {"malicious", cfg.attack.malicious},
                 {"targets_high", cfg.attack.targets_high},
                 {"targets_low", cfg.attack.targets_low},
                 {"targets_random", cfg.attack.targets_random}};
  j["out"] = cfg.out.string();
  j["jobs"] = cfg.jobs;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.schema_version = j.value("schema_version", 1);
  if (cfg.schema_version != 1)
    throw std::invalid_argument("unsupported schema_version");
  cfg.dataset = dataset_from_json(j.at("dataset"));
  cfg.model = j.value("model", "gcn");
  cfg.participants = j.value("participants", 2);
  cfg.partition_mode = j.value("partition_mode", "dual");
  cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{1});
  if (j.contains("train")) {
    const json& t = j["train"];
    cfg.train.epochs = t.value("epochs", 200);
    cfg.train.lr = t.value("lr", 0.01);
    cfg.train.hidden_dim = t.value("hidden_dim", 32);
    cfg.train.embed_dim = t.value("embed_dim", 16);
    cfg.train.server_hidden = t.value("server_hidden", std::vector<int>{32});
    if (t.contains("defense"))
      cfg.train.defense = defense_from_json(t["defense"]);
  }
  if (j.contains("split")) {
    const json& s = j["split"];
    cfg.split.per_class_train = s.value("per_class_train", 20);
    cfg.split.val_size = s.value("val_size", 500);
    cfg.split.test_size = s.value("test_size", 1000);
  }
  if (j.contains("attack")) {
    const json& a = j["attack"];
    cfg.attack.method = a.value("method", "none");
    cfg.attack.eps = a.value("eps", 0.01);
    cfg.attack.delta = a.value("delta", 1);
    cfg.attack.grn_iters = a.value("grn_iters", 200);
    cfg.attack.shadow_iters = a.value("shadow_iters", 200);
    cfg.attack.surrogate_epochs = a.value("surrogate_epochs", 200);
    cfg.attack.malicious = a.value("malicious", 0);
    cfg.attack.targets_high = a.value("targets_high", 20);
    cfg.attack.targets_low = a.value("targets_low", 20);
    cfg.attack.targets_random = a.value("targets_random", 60);
  }
  cfg.out = j.value("out", std::string("results"));
  cfg.jobs = j.value("jobs", 1);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty())
    throw std::invalid_argument("config: seeds must be non-empty");
  if (cfg.participants < 2)
    throw std::invalid_argument("config: participants must be >= 2");
  if (cfg.partition_mode != "dual" && cfg.partition_mode != "feature_only")
    throw std::invalid_argument("config: partition_mode must be dual or feature_only");
  if (cfg.partition_mode == "dual" && cfg.participants != 2)
    throw std::invalid_argument("config: dual partition requires 2 participants");
  model_kind_from_string(cfg.model);
  const std::string& m = cfg.attack.method;
  if (m != "none" && m != "fraudster" && m != "rnd" && m != "fga")
    throw std::invalid_argument("config: unknown attack method '" + m + "'");
  if (cfg.attack.delta < 1)
    throw std::invalid_argument("config: attack delta must be >= 1");
  if (cfg.attack.eps < 0.0 || cfg.attack.eps > 1.0)
    throw std::invalid_argument("config: eps must be in [0,1]");
  if (cfg.attack.malicious < 0 || cfg.attack.malicious >= cfg.participants)
    throw std::invalid_argument("config: malicious participant out of range");
  if (cfg.train.defense.beta < 0.0)
    throw std::invalid_argument("config: defense beta must be >= 0");
  if (cfg.train.defense.kind == DefenseKind::kTopK &&
      (cfg.train.defense.k < 1 || cfg.train.defense.k > cfg.train.embed_dim))
    throw std::invalid_argument("config: defense k must be in [1, embed_dim]");
  if (cfg.dataset.kind == DatasetSpec::Kind::kDir &&
      !std::filesystem::exists(resolve_dataset_dir(cfg.dataset.dir)))
    throw std::invalid_argument("config: dataset directory not found: " +
                                cfg.dataset.dir.string());
  if (cfg.jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
}

std::filesystem::path resolve_dataset_dir(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir)) return dir;
  if (const char* base = std::getenv("GVFL_DATA_DIR")) {
    const auto candidate = std::filesystem::path(base) / dir;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return dir;
}

Graph load_dataset(const DatasetSpec& spec) {
  if (spec.kind == DatasetSpec::Kind::kDir)
    return load_graph_dir(resolve_dataset_dir(spec.dir));
  SeededRng rng(spec.synth_seed);
  return synth_sbm(spec.blocks, spec.intra_p, spec.inter_p, spec.feat_dim, rng);
}

SeedOutcome run_seed(const ExperimentConfig& cfg, const Graph& g,
                     std::uint64_t seed) {
  SeededRng root(seed);
  SeededRng partition_rng = root.split(2);
  SeededRng split_rng = root.split(3);
  SeededRng build_rng = root.split(4);
  SeededRng train_rng = root.split(5);
  SeededRng target_rng = root.split(6);
  SeededRng attack_rng = root.split(7);

  const PartitionMode mode = cfg.partition_mode == "dual"
                                 ? PartitionMode::kDualSplit
                                 : PartitionMode::kFeatureOnly;
  const VerticalPartition part =
      partition(g, cfg.participants, mode, partition_rng);
  const SplitSpec split = make_split(g, split_rng, cfg.split.per_class_train,
                                     cfg.split.val_size, cfg.split.test_size);
  GvflSystem system = build_system(g, part, split,
                                   model_kind_from_string(cfg.model),
                                   cfg.train, build_rng);
  train(system, train_rng);

  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.train_loss = system.train_loss;
  outcome.clean_test_accuracy = accuracy(system, split.test);
  outcome.contributions = contribution(system);

  if (cfg.attack.method != "none") {
    const TargetSelection sel =
        select_targets(system, split.test, target_rng, cfg.attack.targets_high,
                       cfg.attack.targets_low, cfg.attack.targets_random);
    const std::vector<int> targets = sel.all();
    if (cfg.attack.method == "fraudster") {
      FraudsterOptions opts;
      opts.eps = cfg.attack.eps;
      opts.delta = cfg.attack.delta;
      opts.steal.iters = cfg.attack.grn_iters;
      opts.shadow.iters = cfg.attack.shadow_iters;
      outcome.attack =
          run_attack(system, cfg.attack.malicious, targets, attack_rng, opts);
    } else {
      BaselineOptions opts;
      opts.delta = cfg.attack.delta;
      opts.surrogate_epochs = cfg.attack.surrogate_epochs;
      outcome.attack = run_baseline(system, cfg.attack.malicious,
                                    cfg.attack.method, targets, attack_rng, opts);
    }
  }
  return outcome;
}

std::string seed_outcome_json(const ExperimentConfig& cfg,
                              const SeedOutcome& outcome) {
  json j;
  j["seed"] = outcome.seed;
  j["dataset"] = cfg.dataset.name;
  j["model"] = cfg.model;
  j["clean_test_accuracy"] = outcome.clean_test_accuracy;
  j["train_loss"] = outcome.train_loss;
  j["contributions"] = outcome.contributions;
  if (outcome.attack) {
    const AttackRun& a = *outcome.attack;
    json ja;
    ja["method"] = a.method;
    ja["eps"] = a.eps;
    ja["delta"] = a.delta;
    ja["malicious"] = a.malicious;
    ja["post_accuracy"] = a.post_accuracy;
    ja["shadow_agreement"] = a.shadow_agreement;
    ja["grn_loss"] = a.grn_loss;
    ja["shadow_loss"] = a.shadow_loss;
    json targets = json::array();
    for (const TargetOutcome& t : a.targets) {
      json jt;
      jt["node"] = t.node;
      jt["attack_label"] = t.attack_label;
      jt["clean_pred"] = t.clean_pred;
      jt["adv_pred"] = t.adv_pred;
      jt["margin_before"] = t.margin_before;
      jt["margin_after"] = t.margin_after;
      jt["success"] = t.success;
      json flips = json::array();
      for (const NodePair& p : t.flips) flips.push_back({p.u, p.v});
      jt["flips"] = flips;
      jt["lt_history"] = t.lt_history;
      targets.push_back(std::move(jt));
    }
    ja["targets"] = std::move(targets);
    j["attack"] = std::move(ja);
  }
  return j.dump(2) + "\n";
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const int workers = std::min(jobs, count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ScenarioResult run_scenario(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const Graph g = load_dataset(cfg.dataset);

  ScenarioResult result;
  result.outcomes.resize(cfg.seeds.size());
  parallel_for(static_cast<int>(cfg.seeds.size()), cfg.jobs, [&](int i) {
    result.outcomes[static_cast<std::size_t>(i)] =
        run_seed(cfg, g, cfg.seeds[static_cast<std::size_t>(i)]);
  });

  std::filesystem::create_directories(cfg.out);
  atomic_write_text(cfg.out / "config.json", config_to_json(cfg));
  for (const SeedOutcome& o : result.outcomes) {
    atomic_write_text(cfg.out / ("seed_" + std::to_string(o.seed) + ".json"),
                      seed_outcome_json(cfg, o));
    result.records.push_back({cfg.dataset.name, cfg.model, "clean", o.seed,
                              o.clean_test_accuracy});
    if (o.attack)
      result.records.push_back({cfg.dataset.name, cfg.model, o.attack->method,
                                o.seed, o.attack->post_accuracy});
  }
  result.aggregate_rows = aggregate(result.records);
  atomic_write_text(cfg.out / "aggregate.csv",
                    aggregate_csv(result.aggregate_rows));
  return result;
}

std::string reaggregate_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("seed_", 0) == 0 && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("no seed_*.json files in " + dir.string());
  std::vector<RunRecord> records;
  for (const auto& f : files) {
    std::ifstream in(f);
    const json j = json::parse(in);
    RunRecord clean;
    clean.dataset = j.at("dataset").get<std::string>();
    clean.model = j.at("model").get<std::string>();
    clean.method = "clean";
    clean.seed = j.at("seed").get<std::uint64_t>();
    clean.accuracy = j.at("clean_test_accuracy").get<double>();
    records.push_back(clean);
    if (j.contains("attack")) {
      RunRecord atk = clean;
      atk.method = j["attack"].at("method").get<std::string>();
      atk.accuracy = j["attack"].at("post_accuracy").get<double>();
      records.push_back(atk);
    }
  }
  const auto rows = aggregate(records);
  return aggregate_csv(rows);
}

std::vector<AggregateRow> sweep(const ExperimentConfig& cfg,
                                const std::string& axis,
                                const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  std::vector<AggregateRow> all_rows;
  std::string csv = "axis,value,dataset,model,method,mean,std,runs\n";
  for (double value : values) {
    ExperimentConfig patched = cfg;
    if (axis == "eps") {
      patched.attack.eps = value;
    } else if (axis == "d") {
      patched.train.embed_dim = static_cast<int>(value);
    } else if (axis == "k") {
      patched.train.defense.kind = DefenseKind::kTopK;
      patched.train.defense.k = static_cast<int>(value);
    } else if (axis == "beta") {
      patched.train.defense.kind = DefenseKind::kDp;
      patched.train.defense.beta = value;
    } else if (axis == "K") {
      patched.participants = static_cast<int>(value);
      patched.partition_mode = "feature_only";
    } else {
      throw std::invalid_argument("sweep: unknown axis '" + axis + "'");
    }
    patched.out = cfg.out / (axis + "_" + format_double(value));
    const ScenarioResult res = run_scenario(patched);
    for (const AggregateRow& row : res.aggregate_rows) {
      all_rows.push_back(row);
      csv += axis + ',' + format_double(value) + ',' + row.dataset + ',' +
             row.model + ',' + row.method + ',' + format_double(row.mean) +
             ',' + format_double(row.stddev) + ',' + std::to_string(row.runs) +
             '\n';
    }
  }
  std::filesystem::create_directories(cfg.out);
  atomic_write_text(cfg.out / "sweep.csv", csv);
  return all_rows;
}

}  // namespace gvfl
