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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "eglr/errors.hpp"
#include "eglr/pipeline.hpp"

namespace py = pybind11;
using namespace eglr;

namespace {

DecodeMode parse_decode(const std::string& mode) {
  if (mode == "greedy") return DecodeMode::kGreedy;
  if (mode == "sample") return DecodeMode::kSample;
  throw std::invalid_argument("mode must be 'greedy' or 'sample', got '" + mode + "'");
}

py::dict rerank(const GeneratorModel& gen, const World& world, int user_id, const std::vector<int>& candidates,
                const std::string& mode, std::uint64_t seed) {
  NoGradGuard frozen;
  const auto pool = encode_pool(gen, world, user_id, candidates);
  Rng rng(seed);
  const auto r = generate_list(gen, pool, GenerateOptions::from(gen.config, parse_decode(mode)), rng);
  std::vector<double> entropies;
  for (const auto& s : r.trace.steps) entropies.push_back(s.entropy_before);
  py::dict out;
  out["list"] = r.list;
  out["logprob"] = r.logprob_sum.item();
  out["reason_steps"] = r.trace.reason_steps();
  out["entropies"] = entropies;
  return out;
}

}  // namespace

PYBIND11_MODULE(_eglr, m) {
  m.doc() = "Generative list re-ranking with entropy-guided latent reasoning";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<FileNotFoundError>(m, "MissingFileError", PyExc_FileNotFoundError);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_ini", [](const std::string& text) { return ExperimentConfig::from_ini(text); })
      .def_static("load", &ExperimentConfig::load, py::arg("path"))
      .def_static("keys", &ExperimentConfig::keys)
      .def("to_ini", &ExperimentConfig::to_ini)
      .def("save", &ExperimentConfig::save, py::arg("path"))
      .def("validate", &ExperimentConfig::validate)
      .def("get", [](const ExperimentConfig& c, const std::string& key) { return c.get(key); }, py::arg("key"))
      .def("set", [](ExperimentConfig& c, const std::string& key, const std::string& value) { c.set(key, value); },
           py::arg("key"), py::arg("value"))
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def("__eq__", &ExperimentConfig::operator==)
      .def("__repr__", [](const ExperimentConfig& c) { return "<eglr.Config seed=" + std::to_string(c.seed) + ">"; });

  py::class_<World>(m, "World")
      .def_static("generate", [](const ExperimentConfig& c) { return generate_world(c.world, stage_seed(c, SeedStage::kWorld)); },
                  py::arg("config"))
      .def_static("load", &read_world, py::arg("path"))
      .def("save", [](const World& w, const std::string& path) { write_world(path, w); }, py::arg("path"))
      .def_property_readonly("num_users", [](const World& w) { return w.users.size(); })
      .def_property_readonly("num_items", [](const World& w) { return w.items.size(); })
      .def("category", &World::category, py::arg("item_id"))
      .def("click_probabilities",
           [](const World& w, int user_id, const std::vector<int>& items) { return click_probabilities(w, user_id, items); },
           py::arg("user_id"), py::arg("items"));

  py::class_<EvaluatorModel>(m, "Evaluator")
      .def_static("init", [](const ExperimentConfig& c) { return EvaluatorModel::init(c, stage_seed(c, SeedStage::kEvaluatorInit)); },
                  py::arg("config"))
      .def_static("load", &load_evaluator, py::arg("path"))
      .def("save", [](const EvaluatorModel& e, const std::string& path) { save_evaluator(path, e); }, py::arg("path"))
      .def_readonly("config", &EvaluatorModel::config)
      .def("score",
           [](const EvaluatorModel& e, const World& w, int user_id, const std::vector<int>& items) {
             return evaluator_score(e, w, user_id, items);
           },
           py::arg("world"), py::arg("user_id"), py::arg("items"))
      .def("predict",
           [](const EvaluatorModel& e, const World& w, int user_id, const std::vector<int>& items) {
             NoGradGuard frozen;
             const auto out = evaluator_forward(e, w, user_id, items);
             return py::make_tuple(out.y_point.to_vector(), out.y_cls.item());
           },
           py::arg("world"), py::arg("user_id"), py::arg("items"),
           "Per-item click probabilities and the list-level output.");

  py::class_<GeneratorModel>(m, "Generator")
      .def_static("init", [](const ExperimentConfig& c) { return GeneratorModel::init(c, stage_seed(c, SeedStage::kGeneratorInit)); },
                  py::arg("config"))
      .def_static("from_evaluator",
                  [](const EvaluatorModel& e) { return GeneratorModel::init(e, stage_seed(e.config, SeedStage::kGeneratorInit)); },
                  py::arg("evaluator"))
      .def_static("load", &load_generator, py::arg("path"))
      .def("save", [](const GeneratorModel& g, const std::string& path) { save_generator(path, g); }, py::arg("path"))
      .def_readonly("config", &GeneratorModel::config)
      .def("rerank", &rerank, py::arg("world"), py::arg("user_id"), py::arg("candidates"), py::arg("mode") = "greedy",
           py::arg("seed") = 0,
           "Returns a dict with the list, its log-probability, the REASON step count and the entropy of every step.");

  m.def("ndcg_at_k", [](const std::vector<int>& y, std::size_t k) { return ndcg_at_k(y, k); }, py::arg("labels"),
        py::arg("k"));
  m.def("map_at_k", [](const std::vector<int>& y, std::size_t k) { return map_at_k(y, k); }, py::arg("labels"),
        py::arg("k"));
  m.def("reward_dcg", [](const std::vector<double>& y) { return reward_dcg(y); }, py::arg("scores"));
  m.def("dcg_upper_bound", &dcg_upper_bound, py::arg("list_len"));
  m.def("group_advantages", [](const std::vector<double>& r) { return group_advantages(r); }, py::arg("rewards"));
  m.def("softmax_entropy", [](const std::vector<double>& logits, double tau) { return softmax_entropy(logits, tau); },
        py::arg("logits"), py::arg("tau"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release unlocked;
          code = cli::run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
