// Copyright 2026 The EGLR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "eglr/checkpoint.hpp"
#include "eglr/errors.hpp"
#include "eglr/pipeline.hpp"
#include "json.hpp"

namespace eglr::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Progress goes to stderr; results only ever go to files.
class Progress {
 public:
  Progress(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
  template <typename... Args>
  void operator()(const Args&... args) {
    if (quiet_) return;
    std::lock_guard lock(mu_);
    (err_ << ... << args) << '\n';
  }

 private:
  std::ostream& err_;
  bool quiet_;
  std::mutex mu_;
};

std::string resolve_key(const std::string& key) {
  const auto keys = ExperimentConfig::keys();
  if (key.find('.') != std::string::npos) return key;
  std::optional<std::string> found;
  for (const auto& k : keys) {
    if (k.size() > key.size() && k.compare(k.size() - key.size(), key.size(), key) == 0 &&
        k[k.size() - key.size() - 1] == '.') {
      if (found) throw ConfigError("ambiguous config key '" + key + "'");
      found = k;
    }
  }
  if (!found) throw ConfigError("unknown config key: " + key);
  return *found;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + text + "'");
  return {resolve_key(text.substr(0, eq)), text.substr(eq + 1)};
}

void apply_sets(ExperimentConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto [key, value] = split_assignment(s);
    cfg.set(key, value);
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  ExperimentConfig cfg;
  if (!path.empty()) {
    try {
      cfg = ExperimentConfig::load(path);
    } catch (const ParseError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  cfg.apply_env_overrides();
  apply_sets(cfg, sets);
  cfg.validate();
  return cfg;
}

// Config stored in a checkpoint, adjusted by EGLR_SEED and --set. The
// architecture sections must stay as trained.
ExperimentConfig adjust_checkpoint_config(const ExperimentConfig& stored, const std::vector<std::string>& sets) {
  ExperimentConfig cfg = stored;
  cfg.apply_env_overrides();
  apply_sets(cfg, sets);
  cfg.validate();
  const std::vector<std::string> frozen = {"world.", "model."};
  require_same_sections(cfg, stored, frozen, "--set may not change the architecture");
  return cfg;
}

void require_exists(const std::string& path) {
  if (!fs::exists(path)) throw FileNotFoundError(path);
}

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string sibling_world(const std::string& path) {
  return (fs::path(path).parent_path() / kWorldFile).string();
}

World load_world_for(const ExperimentConfig& cfg, const std::string& path) {
  require_exists(path);
  World w = read_world(path);
  if (!(w.config == cfg.world)) {
    throw ConfigError(path + ": world was generated with a different [world] section than the config");
  }
  return w;
}

// "greedy", "sample" or "pass@K".
struct RerankMode {
  DecodeMode decode = DecodeMode::kGreedy;
  std::size_t pass_k = 0;  // > 0 for pass@K
};

RerankMode parse_mode(const std::string& text) {
  if (text == "greedy") return {DecodeMode::kGreedy, 0};
  if (text == "sample") return {DecodeMode::kSample, 0};
  if (text.rfind("pass@", 0) == 0) {
    const auto n = text.substr(5);
    if (!n.empty() && n.find_first_not_of("0123456789") == std::string::npos) {
      const auto k = std::stoul(n);
      if (k >= 1) return {DecodeMode::kSample, k};
    }
  }
  throw UsageError("--mode must be greedy, sample or pass@K with K >= 1, got '" + text + "'");
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < jobs; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- commands --------------------------------------------------------------

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::string data;
  std::string log;
  std::string evaluator;
  std::string generator;
  std::string pools;
  std::string world;
  std::string mode = "greedy";
  std::string report;
  std::string efficiency;
  std::string trace;
  std::vector<std::string> grid;
  std::size_t lists = 0;
  std::size_t jobs = 1;
};

void cmd_gen_data(const Options& o, Progress& progress) {
  const auto cfg = load_config(o.config, o.sets);
  const auto data = generate_data(cfg);
  write_data(o.out, data);
  cfg.save((fs::path(o.out) / "config.ini").string());
  progress("gen-data: ", data.train.size(), " train / ", data.test.size(), " test lists, ", data.pools.size(),
           " generator pools -> ", o.out);
}

void cmd_train_evaluator(const Options& o, Progress& progress) {
  const auto cfg = load_config(o.config, o.sets);
  require_exists(o.data);
  const fs::path dir(o.data);
  const World world = load_world_for(cfg, (dir / kWorldFile).string());
  const auto train = read_interactions((dir / kTrainFile).string());
  const auto test_path = (dir / kTestFile).string();
  const auto test = fs::exists(test_path) ? read_interactions(test_path) : std::vector<InteractionRecord>{};
  for (const auto& r : train) {
    if (r.items.size() != cfg.task.list_len) {
      throw ConfigError("training lists have length " + std::to_string(r.items.size()) + " but task.list_len is " +
                        std::to_string(cfg.task.list_len));
    }
  }

  std::optional<std::ofstream> log;
  if (!o.log.empty()) {
    log = open_output(o.log);
    *log << "epoch,train_point,train_list,train_total,test_point,test_list,test_total\n";
  }
  const auto model = train_evaluator_model(cfg, world, train, [&](std::size_t epoch, const EpochLoss& l,
                                                                  const EvaluatorModel& m) {
    EpochLoss held{};
    if (!test.empty()) held = evaluate_losses(m, world, test);
    if (log) {
      *log << epoch << ',' << format_number(l.point) << ',' << format_number(l.list) << ','
           << format_number(l.total) << ',' << format_number(held.point) << ',' << format_number(held.list)
           << ',' << format_number(held.total) << '\n';
    }
    progress("epoch ", epoch + 1, "/", cfg.optim.eval_epochs, "  train ", l.total, "  held-out point ", held.point);
  });
  save_evaluator(o.out, model);
  progress("train-evaluator: saved ", o.out);
}

void cmd_train_generator(const Options& o, Progress& progress) {
  require_exists(o.evaluator);
  const auto evaluator = load_evaluator(o.evaluator);
  ExperimentConfig cfg = o.config.empty() ? adjust_checkpoint_config(evaluator.config, o.sets)
                                          : load_config(o.config, o.sets);
  const std::vector<std::string> arch = {"world.", "model."};
  require_same_sections(cfg, evaluator.config, arch, "config does not match the evaluator checkpoint");
  require_exists(o.pools);
  const World world = load_world_for(cfg, o.world.empty() ? sibling_world(o.pools) : o.world);
  const auto pools = read_pools(o.pools);

  auto log = open_output(o.log.empty() ? o.out + ".log.csv" : o.log);
  write_train_log_header(log);
  const auto run = train_generator_model(cfg, evaluator, world, pools, [&](const TrainLogRow& row) {
    write_train_log_row(log, row);
    if ((row.iteration + 1) % 100 == 0 || row.iteration + 1 == cfg.optim.gen_iterations) {
      progress("iteration ", row.iteration + 1, "/", cfg.optim.gen_iterations, "  reward ", row.mean_reward,
               "  reason/list ", row.reason_steps_per_list);
    }
  });
  save_generator(o.out, run.model);
  progress("train-generator: saved ", o.out);
}

struct LoadedPair {
  GeneratorModel generator;
  EvaluatorModel evaluator;
};

LoadedPair load_pair(const Options& o) {
  require_exists(o.generator);
  require_exists(o.evaluator);
  LoadedPair p{load_generator(o.generator), load_evaluator(o.evaluator)};
  p.generator.config = adjust_checkpoint_config(p.generator.config, o.sets);
  const std::vector<std::string> arch = {"world.", "model."};
  require_same_sections(p.generator.config, p.evaluator.config, arch, "generator and evaluator checkpoints disagree");
  return p;
}

void cmd_rerank(const Options& o, Progress& progress) {
  const auto mode = parse_mode(o.mode);
  auto [gen, eval] = load_pair(o);
  require_exists(o.pools);
  const World world = load_world_for(gen.config, o.world.empty() ? sibling_world(o.pools) : o.world);
  auto pools = read_pools(o.pools);
  if (o.lists > 0 && pools.size() > o.lists) pools.resize(o.lists);

  const auto options = GenerateOptions::from(gen.config, mode.decode);
  const auto decode_seed = stage_seed(gen.config, SeedStage::kDecode);
  auto out = open_output(o.out);
  std::vector<GenerationTrace> traces;
  NoGradGuard frozen;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const auto enc = encode_pool(gen, world, pools[i].user_id, pools[i].candidates);
    nlohmann::json row = {{"pool", i}, {"user_id", pools[i].user_id}};
    if (mode.pass_k > 0) {
      const auto r = pass_at_k(gen, eval, world, enc, mode.pass_k, child_seed(decode_seed, i));
      row["list"] = r.best_list;
      row["score"] = r.best_score;
      row["scores"] = r.scores;
    } else {
      Rng rng(child_seed(decode_seed, i));
      auto r = generate_list(gen, enc, options, rng);
      row["list"] = r.list;
      row["score"] = evaluator_score(eval, world, pools[i].user_id, r.list);
      traces.push_back(std::move(r.trace));
    }
    out << row.dump() << '\n';
  }
  if (!o.trace.empty()) {
    if (mode.pass_k > 0) throw UsageError("--trace is not available with pass@K");
    write_trace_jsonl(o.trace, gen.config, traces);
  }
  progress("rerank: ", pools.size(), " lists (", o.mode, ") -> ", o.out);
}

void cmd_evaluate(const Options& o, Progress& progress) {
  auto [gen, eval] = load_pair(o);
  require_exists(o.data);
  std::string records_path = o.data, world_path = o.world;
  if (fs::is_directory(o.data)) {
    records_path = (fs::path(o.data) / kTestFile).string();
    if (world_path.empty()) world_path = (fs::path(o.data) / kWorldFile).string();
  } else if (world_path.empty()) {
    world_path = sibling_world(o.data);
  }
  const World world = load_world_for(gen.config, world_path);
  require_exists(records_path);
  auto records = read_interactions(records_path);
  if (o.lists > 0 && records.size() > o.lists) records.resize(o.lists);
  const auto reports = evaluate_reranking(gen, eval, world, records);
  auto out = open_output(o.report);
  write_metric_csv(out, reports);
  progress("evaluate: ", records.size(), " lists -> ", o.report);
}

void cmd_probe_entropy(const Options& o, Progress& progress) {
  GeneratorModel gen;
  if (!o.generator.empty()) {
    require_exists(o.generator);
    gen = load_generator(o.generator);
    gen.config = adjust_checkpoint_config(gen.config, o.sets);
  } else if (!o.config.empty() || !o.sets.empty()) {
    const auto cfg = load_config(o.config, o.sets);
    gen = GeneratorModel::init(cfg, stage_seed(cfg, SeedStage::kGeneratorInit));
  } else {
    throw UsageError("probe-entropy needs --generator or --config");
  }
  const auto mode = parse_mode(o.mode);
  if (mode.pass_k > 0) throw UsageError("probe-entropy supports --mode greedy or sample");
  require_exists(o.pools);
  const World world = load_world_for(gen.config, o.world.empty() ? sibling_world(o.pools) : o.world);
  auto pools = read_pools(o.pools);
  if (o.lists > 0 && pools.size() > o.lists) pools.resize(o.lists);
  if (pools.empty()) throw std::invalid_argument("probe-entropy: no pools");

  std::vector<PoolEncoding> encoded;
  for (const auto& p : pools) encoded.push_back(encode_pool(gen, world, p.user_id, p.candidates));
  const auto decode_seed = stage_seed(gen.config, SeedStage::kDecode);
  NoGradGuard frozen;
  auto rollouts = [&](const EglrConfig& eglr, std::vector<double>* wall) {
    auto options = GenerateOptions::from(gen.config, mode.decode);
    options.eglr = eglr;
    std::vector<GenerationTrace> traces;
    for (std::size_t i = 0; i < encoded.size(); ++i) {
      Rng rng(child_seed(decode_seed, i));
      const auto t0 = std::chrono::steady_clock::now();
      auto r = generate_list(gen, encoded[i], options, rng);
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      if (wall) wall->push_back(dt.count());
      traces.push_back(std::move(r.trace));
    }
    return traces;
  };

  const auto traces = rollouts(gen.config.eglr, nullptr);
  auto out = open_output(o.report);
  write_entropy_csv(out, entropy_profile(traces));
  if (!o.trace.empty()) write_trace_jsonl(o.trace, gen.config, traces);
  if (!o.efficiency.empty()) {
    std::vector<EfficiencyRow> rows;
    for (std::size_t s = 0; s <= 3; ++s) {
      auto eglr = gen.config.eglr;
      eglr.max_reason_steps = s;
      std::vector<double> wall;
      const auto t = rollouts(eglr, &wall);
      rows.push_back(efficiency_report("s_max=" + std::to_string(s), t, wall));
    }
    auto eff = open_output(o.efficiency);
    write_efficiency_csv(eff, rows);
  }
  progress("probe-entropy: ", pools.size(), " lists -> ", o.report);
}

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

std::vector<GridAxis> parse_grid(const std::vector<std::string>& args) {
  std::vector<GridAxis> axes;
  for (const auto& arg : args) {
    const auto [key, list] = split_assignment(arg);
    GridAxis axis{key, {}};
    std::size_t start = 0;
    while (start <= list.size()) {
      const auto comma = list.find(',', start);
      const auto v = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (v.empty()) throw UsageError("empty value in --grid " + arg);
      axis.values.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    for (const auto& a : axes) {
      if (a.key == key) throw UsageError("--grid key repeated: " + key);
    }
    axes.push_back(std::move(axis));
  }
  return axes;
}

// Everything that determines the data and the evaluator, but not the
// generator: the config with [eglr] and gen_iterations at their defaults.
std::string evaluator_key(const ExperimentConfig& cfg) {
  ExperimentConfig k = cfg;
  k.eglr = EglrConfig{};
  k.optim.gen_iterations = OptimConfig{}.gen_iterations;
  return k.to_ini();
}

void cmd_sweep(const Options& o, Progress& progress) {
  const auto base = load_config(o.config, o.sets);
  const auto axes = parse_grid(o.grid);
  if (axes.empty()) throw UsageError("sweep needs at least one --grid key=v1,v2,...");

  struct Point {
    std::string label;
    ExperimentConfig config;
    std::size_t group = 0;
  };
  std::vector<Point> points(1, Point{"", base, 0});
  for (const auto& axis : axes) {
    std::vector<Point> next;
    for (const auto& p : points) {
      for (const auto& v : axis.values) {
        Point q = p;
        q.label += (q.label.empty() ? "" : ";") + axis.key + "=" + v;
        q.config.set(axis.key, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  for (auto& p : points) {
    try {
      p.config.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("grid point " + p.label + ": " + e.what());
    }
  }

  std::optional<EvaluatorModel> fixed_eval;
  if (!o.evaluator.empty()) {
    require_exists(o.evaluator);
    fixed_eval = load_evaluator(o.evaluator);
  }
  std::optional<DataBundle> fixed_data;
  if (!o.data.empty()) fixed_data = read_data(o.data);

  // One data set and evaluator per distinct evaluator_key.
  std::vector<std::string> keys;
  for (auto& p : points) {
    const auto k = fixed_eval ? std::string() : evaluator_key(p.config);
    auto it = std::find(keys.begin(), keys.end(), k);
    if (it == keys.end()) it = keys.insert(keys.end(), k);
    p.group = static_cast<std::size_t>(it - keys.begin());
  }
  const std::vector<std::string> arch = {"world.", "model."};
  for (const auto& p : points) {
    if (fixed_eval) require_same_sections(p.config, fixed_eval->config, arch, "grid point " + p.label);
    if (fixed_data && !(fixed_data->world.config == p.config.world)) {
      throw ConfigError("grid point " + p.label + ": [world] differs from the data in " + o.data);
    }
  }

  struct Group {
    const DataBundle* data = nullptr;
    std::optional<DataBundle> own;
    std::optional<EvaluatorModel> eval;
  };
  std::vector<Group> groups(keys.size());
  parallel_for(groups.size(), o.jobs, [&](std::size_t g) {
    const auto& cfg = std::find_if(points.begin(), points.end(), [&](const Point& p) { return p.group == g; })->config;
    if (fixed_data) {
      groups[g].data = &*fixed_data;
    } else {
      groups[g].own = generate_data(cfg);
      groups[g].data = &*groups[g].own;
    }
    if (fixed_eval) {
      groups[g].eval = *fixed_eval;
    } else {
      progress("sweep: training evaluator ", g + 1, "/", groups.size());
      groups[g].eval = train_evaluator_model(cfg, groups[g].data->world, groups[g].data->train);
    }
  });

  std::vector<MetricReport> rows(points.size());
  parallel_for(points.size(), o.jobs, [&](std::size_t i) {
    const auto& p = points[i];
    const auto& group = groups[p.group];
    const auto run = train_generator_model(p.config, *group.eval, group.data->world, group.data->pools);
    auto reports = evaluate_reranking(run.model, *group.eval, group.data->world, group.data->test);
    rows[i] = reports[0];
    rows[i].label = p.label;
    progress("sweep: ", p.label, " evaluator_score ", rows[i].values["evaluator_score"]);
  });
  auto out = open_output(o.report);
  write_metric_csv(out, rows);
}

void add_sets(CLI::App* sub, Options& o) {
  sub->add_option("--set", o.sets, "Override a config value (key=value, repeatable)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generative list re-ranking with entropy-guided latent reasoning"};
  app.name("eglr");
  bool print_default = false, quiet = false;
  app.add_flag("--print-default-config", print_default, "Print the built-in default config and exit");
  app.add_flag("-q,--quiet", quiet, "No progress messages on stderr");
  app.require_subcommand(0, 1);
  Options o;

  auto* gen_data = app.add_subcommand("gen-data", "Simulate a world, logged lists and candidate pools");
  gen_data->add_option("--config", o.config, "Config file (defaults when omitted)");
  gen_data->add_option("--out", o.out, "Output directory")->required();
  add_sets(gen_data, o);

  auto* train_eval = app.add_subcommand("train-evaluator", "Pre-train the evaluator on logged feedback");
  train_eval->add_option("--config", o.config, "Config file");
  train_eval->add_option("--data", o.data, "Directory written by gen-data")->required();
  train_eval->add_option("--out", o.out, "Evaluator checkpoint to write")->required();
  train_eval->add_option("--log", o.log, "Per-epoch loss CSV");
  add_sets(train_eval, o);

  auto* train_gen = app.add_subcommand("train-generator", "Train the generator with group-relative policy gradients");
  train_gen->add_option("--config", o.config, "Config file (defaults to the evaluator's)");
  train_gen->add_option("--evaluator", o.evaluator, "Evaluator checkpoint")->required();
  train_gen->add_option("--pools", o.pools, "Candidate pools (JSONL)")->required();
  train_gen->add_option("--world", o.world, "World file (defaults to world.jsonl next to --pools)");
  train_gen->add_option("--out", o.out, "Generator checkpoint to write")->required();
  train_gen->add_option("--log", o.log, "Training log CSV (defaults to <out>.log.csv)");
  add_sets(train_gen, o);

  auto* rerank = app.add_subcommand("rerank", "Generate a list for every pool");
  rerank->add_option("--generator", o.generator, "Generator checkpoint")->required();
  rerank->add_option("--evaluator", o.evaluator, "Evaluator checkpoint")->required();
  rerank->add_option("--pools", o.pools, "Candidate pools (JSONL)")->required();
  rerank->add_option("--world", o.world, "World file (defaults to world.jsonl next to --pools)");
  rerank->add_option("--mode", o.mode, "greedy, sample or pass@K")->capture_default_str();
  rerank->add_option("--out", o.out, "Lists (JSONL)")->required();
  rerank->add_option("--trace", o.trace, "Decoding trace (JSONL)");
  rerank->add_option("--lists", o.lists, "Only the first N pools (0 = all)");
  add_sets(rerank, o);

  auto* evaluate = app.add_subcommand("evaluate", "Re-rank logged lists and report ranking metrics");
  evaluate->add_option("--generator", o.generator, "Generator checkpoint")->required();
  evaluate->add_option("--evaluator", o.evaluator, "Evaluator checkpoint")->required();
  evaluate->add_option("--data", o.data, "gen-data directory (uses test.jsonl) or an interactions file")->required();
  evaluate->add_option("--world", o.world, "World file");
  evaluate->add_option("--report", o.report, "Metric CSV")->required();
  evaluate->add_option("--lists", o.lists, "Only the first N lists (0 = all)");
  add_sets(evaluate, o);

  auto* probe = app.add_subcommand("probe-entropy", "Per-position decision entropy before and after reasoning");
  probe->add_option("--generator", o.generator, "Generator checkpoint");
  probe->add_option("--config", o.config, "Use an untrained generator built from this config");
  probe->add_option("--pools", o.pools, "Candidate pools (JSONL)")->required();
  probe->add_option("--world", o.world, "World file (defaults to world.jsonl next to --pools)");
  probe->add_option("--mode", o.mode, "greedy or sample")->capture_default_str();
  probe->add_option("--report", o.report, "Entropy profile CSV")->required();
  probe->add_option("--efficiency", o.efficiency, "Reasoning steps and latency for S_max = 0..3 (CSV)");
  probe->add_option("--trace", o.trace, "Decoding trace (JSONL)");
  probe->add_option("--lists", o.lists, "Only the first N pools (0 = all)");
  add_sets(probe, o);

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate a generator for every grid point");
  sweep->add_option("--config", o.config, "Base config file");
  sweep->add_option("--grid", o.grid, "key=v1,v2,... (repeatable; the grid is the product)")->required();
  sweep->add_option("--report", o.report, "One metric row per grid point (CSV)")->required();
  sweep->add_option("--data", o.data, "Reuse a gen-data directory");
  sweep->add_option("--evaluator", o.evaluator, "Reuse an evaluator checkpoint");
  sweep->add_option("--jobs", o.jobs, "Grid points run concurrently")->capture_default_str();
  add_sets(sweep, o);

  std::vector<const char*> argv = {"eglr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (print_default) {
    out << ExperimentConfig{}.to_ini();
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kExitUsage;
  }

  Progress progress(err, quiet);
  auto fail = [&](const char* category, const std::exception& e, int code) {
    err << "eglr: error: " << category << ": " << e.what() << '\n';
    return code;
  };
  try {
    if (gen_data->parsed()) cmd_gen_data(o, progress);
    if (train_eval->parsed()) cmd_train_evaluator(o, progress);
    if (train_gen->parsed()) cmd_train_generator(o, progress);
    if (rerank->parsed()) cmd_rerank(o, progress);
    if (evaluate->parsed()) cmd_evaluate(o, progress);
    if (probe->parsed()) cmd_probe_entropy(o, progress);
    if (sweep->parsed()) cmd_sweep(o, progress);
  } catch (const UsageError& e) {
    return fail("usage", e, kExitUsage);
  } catch (const FileNotFoundError& e) {
    return fail("missing file", e, kExitMissingFile);
  } catch (const ConfigError& e) {
    return fail("invalid config", e, kExitInvalidConfig);
  } catch (const CheckpointError& e) {
    return fail("checkpoint", e, kExitCheckpoint);
  } catch (const ParseError& e) {
    return fail("malformed data", e, kExitBadData);
  } catch (const VocabularyError& e) {
    return fail("malformed data", e, kExitBadData);
  } catch (const std::exception& e) {
    return fail("failed", e, kExitFailure);
  }
  return kExitOk;
}

}  // namespace eglr::cli
