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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "eglr/config.hpp"
#include "toy.hpp"

using namespace eglr;
using eglr::cli::run_cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  args.insert(args.begin(), "-q");
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// A fresh scratch directory holding a tiny config.
struct Workdir {
  fs::path dir;
  std::string config;

  explicit Workdir(const std::string& name) {
    dir = fs::temp_directory_path() / ("eglr_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto cfg = eglr::testing::toy_config();
    cfg.task.lists = 120;
    cfg.task.pools = 12;
    cfg.optim.eval_epochs = 2;
    cfg.optim.gen_iterations = 6;
    config = (dir / "toy.ini").string();
    cfg.save(config);
  }
  std::string at(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("print-default-config round-trips") {
  const auto r = run({"--print-default-config"});
  CHECK(r.code == 0);
  CHECK(ExperimentConfig::from_ini(r.out) == ExperimentConfig{});
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"no-such-command"}).code == cli::kExitUsage);
  CHECK(run({"gen-data"}).code == cli::kExitUsage);  // --out is required
  CHECK(run({"gen-data", "--out", "x", "--set", "novalue"}).code == cli::kExitUsage);
}

TEST_CASE("full pipeline") {
  Workdir w("pipeline");
  const auto data = w.at("data");
  REQUIRE(run({"gen-data", "--config", w.config, "--out", data}).code == 0);
  for (const char* f : {"world.jsonl", "train.jsonl", "test.jsonl", "pools.jsonl", "test_pools.jsonl", "config.ini"}) {
    CHECK(fs::exists(fs::path(data) / f));
  }
  CHECK(line_count(fs::path(data) / "train.jsonl") == 96);
  CHECK(line_count(fs::path(data) / "test.jsonl") == 24);

  const auto ev = w.at("ev.ckpt"), gen = w.at("gen.ckpt");
  REQUIRE(run({"train-evaluator", "--config", w.config, "--data", data, "--out", ev, "--log", w.at("ev.csv")}).code == 0);
  CHECK(line_count(w.at("ev.csv")) == 3);
  REQUIRE(run({"train-generator", "--evaluator", ev, "--pools", data + "/pools.jsonl", "--out", gen}).code == 0);
  CHECK(slurp(gen + ".log.csv").rfind("iteration,mean_reward,std_reward,mean_entropy,reason_steps_per_list,loss\n", 0) == 0);
  CHECK(line_count(gen + ".log.csv") == 7);

  SUBCASE("evaluate is byte-identical across runs") {
    REQUIRE(run({"evaluate", "--generator", gen, "--evaluator", ev, "--data", data, "--report", w.at("m1.csv")}).code == 0);
    REQUIRE(run({"evaluate", "--generator", gen, "--evaluator", ev, "--data", data, "--report", w.at("m2.csv")}).code == 0);
    const auto report = slurp(w.at("m1.csv"));
    CHECK(report == slurp(w.at("m2.csv")));
    CHECK(report.rfind("model,lists,evaluator_score,map@3,ndcg@3\n", 0) == 0);
    CHECK(report.find("\neglr,24,") != std::string::npos);
    CHECK(report.find("\nlogged,24,") != std::string::npos);
  }
  SUBCASE("rerank modes") {
    for (const std::string mode : {"greedy", "sample", "pass@3"}) {
      const auto out = w.at("r_" + mode + ".jsonl");
      REQUIRE(run({"rerank", "--generator", gen, "--evaluator", ev, "--pools", data + "/test_pools.jsonl", "--mode",
                   mode, "--out", out})
                  .code == 0);
      CHECK(line_count(out) == 24);
    }
    CHECK(run({"rerank", "--generator", gen, "--evaluator", ev, "--pools", data + "/test_pools.jsonl", "--mode",
               "beam", "--out", w.at("x")})
              .code == cli::kExitUsage);
  }
  SUBCASE("probe-entropy") {
    REQUIRE(run({"probe-entropy", "--generator", gen, "--pools", data + "/test_pools.jsonl", "--report",
                 w.at("h.csv"), "--efficiency", w.at("e.csv"), "--trace", w.at("t.jsonl")})
                .code == 0);
    CHECK(line_count(w.at("h.csv")) == 1 + 3);
    CHECK(line_count(w.at("e.csv")) == 1 + 4);
    CHECK(slurp(w.at("e.csv")).find("\ns_max=0,24,0,") != std::string::npos);
  }
  SUBCASE("probe-entropy on an untrained generator") {
    REQUIRE(run({"probe-entropy", "--config", w.config, "--set", "eglr.entropy_threshold=0.5", "--pools",
                 data + "/test_pools.jsonl", "--report", w.at("h0.csv")})
                .code == 0);
    CHECK(line_count(w.at("h0.csv")) == 1 + 3);
  }
  SUBCASE("sweep over alpha") {
    REQUIRE(run({"sweep", "--config", w.config, "--data", data, "--evaluator", ev, "--grid", "alpha=1,2,5,10",
                 "--report", w.at("s.csv"), "--jobs", "2"})
                .code == 0);
    const auto s = slurp(w.at("s.csv"));
    CHECK(line_count(w.at("s.csv")) == 1 + 4);
    CHECK(s.find("\neglr.alpha=1,") < s.find("\neglr.alpha=10,"));
  }
  SUBCASE("architecture changes are refused") {
    CHECK(run({"rerank", "--generator", gen, "--evaluator", ev, "--pools", data + "/test_pools.jsonl", "--set",
               "model.heads=1", "--out", w.at("x")})
              .code == cli::kExitInvalidConfig);
  }
}

TEST_CASE("distinct diagnostics") {
  Workdir w("errors");
  SUBCASE("missing file") {
    const auto r = run({"train-evaluator", "--config", w.at("nope.ini"), "--data", w.at("d"), "--out", w.at("e")});
    CHECK(r.code == cli::kExitMissingFile);
    CHECK(r.err.find("missing file") != std::string::npos);
  }
  SUBCASE("invalid config") {
    std::ofstream(w.at("bad.ini")) << "[eglr]\nalpha = 0.5\n";
    const auto r = run({"gen-data", "--config", w.at("bad.ini"), "--out", w.at("d")});
    CHECK(r.code == cli::kExitInvalidConfig);
    CHECK(r.err.find("alpha") != std::string::npos);
  }
  SUBCASE("K > M") {
    const auto r = run({"gen-data", "--config", w.config, "--set", "task.list_len=7", "--out", w.at("d")});
    CHECK(r.code == cli::kExitInvalidConfig);
    CHECK(r.err.find("K > M") != std::string::npos);
  }
  SUBCASE("checkpoint version") {
    {
      std::ofstream f(w.at("old.ckpt"), std::ios::binary);
      f.write("EGLRCKPT\x09\x00\x00\x00", 12);
    }
    REQUIRE(run({"gen-data", "--config", w.config, "--out", w.at("d")}).code == 0);
    const auto r = run({"train-generator", "--evaluator", w.at("old.ckpt"), "--pools", w.at("d/pools.jsonl"), "--out",
                        w.at("g.ckpt")});
    CHECK(r.code == cli::kExitCheckpoint);
    CHECK(r.err.find("version 9") != std::string::npos);
  }
  SUBCASE("malformed data") {
    REQUIRE(run({"gen-data", "--config", w.config, "--out", w.at("d")}).code == 0);
    std::ofstream(w.at("d/train.jsonl"), std::ios::app) << "{oops\n";
    const auto r = run({"train-evaluator", "--config", w.config, "--data", w.at("d"), "--out", w.at("e")});
    CHECK(r.code == cli::kExitBadData);
    CHECK(r.err.find("line 97") != std::string::npos);
  }
}

TEST_CASE("EGLR_SEED overrides the config seed") {
  Workdir w("seed");
  REQUIRE(run({"gen-data", "--config", w.config, "--out", w.at("a")}).code == 0);
  ::setenv("EGLR_SEED", "1234", 1);
  const int code = run({"gen-data", "--config", w.config, "--out", w.at("b")}).code;
  ::unsetenv("EGLR_SEED");
  REQUIRE(code == 0);
  CHECK(ExperimentConfig::load(w.at("b/config.ini")).seed == 1234);
  CHECK(slurp(w.at("a/train.jsonl")) != slurp(w.at("b/train.jsonl")));
  REQUIRE(run({"gen-data", "--config", w.config, "--out", w.at("c")}).code == 0);
  CHECK(slurp(w.at("a/train.jsonl")) == slurp(w.at("c/train.jsonl")));
}
