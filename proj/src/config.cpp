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

#include "eglr/config.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "eglr/errors.hpp"

namespace eglr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(std::string_view text, std::string_view key);

template <>
double parse_value<double>(std::string_view text, std::string_view key) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("invalid number for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}

template <>
std::uint64_t parse_value<std::uint64_t>(std::string_view text, std::string_view key) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("invalid non-negative integer for " + std::string(key) + ": '" +
                      std::string(text) + "'");
  }
  return v;
}

template <>
bool parse_value<bool>(std::string_view text, std::string_view key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + std::string(text) + "'");
}

template <>
RewardMode parse_value<RewardMode>(std::string_view text, std::string_view) {
  return parse_reward_mode(text);
}

std::string format_value(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(RewardMode v) { return to_string(v); }

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::string dotted() const { return section + "." + key; }
};

template <typename Access>
Field field(const char* section, const char* key, Access access) {
  using T = std::remove_cvref_t<decltype(access(std::declval<ExperimentConfig&>()))>;
  Field f;
  f.section = section;
  f.key = key;
  f.get = [access](const ExperimentConfig& c) {
    return format_value(static_cast<std::conditional_t<std::is_integral_v<T> && !std::is_same_v<T, bool>,
                                                       std::uint64_t, T>>(access(c)));
  };
  f.set = [access, name = std::string(section) + "." + key](ExperimentConfig& c,
                                                            std::string_view v) {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      access(c) = static_cast<T>(parse_value<std::uint64_t>(v, name));
    } else {
      access(c) = parse_value<T>(v, name);
    }
  };
  return f;
}

#define EGLR_FIELD(section, key, member) \
  field(section, key, [](auto& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      EGLR_FIELD("world", "users", world.users),
      EGLR_FIELD("world", "items", world.items),
      EGLR_FIELD("world", "user_fields", world.user_fields),
      EGLR_FIELD("world", "item_fields", world.item_fields),
      EGLR_FIELD("world", "user_field_vocab", world.user_field_vocab),
      EGLR_FIELD("world", "item_field_vocab", world.item_field_vocab),
      EGLR_FIELD("world", "latent_dim", world.latent_dim),
      EGLR_FIELD("world", "coef_a", world.coef_a),
      EGLR_FIELD("world", "coef_b", world.coef_b),
      EGLR_FIELD("world", "coef_c", world.coef_c),
      EGLR_FIELD("world", "coef_d0", world.coef_d0),
      EGLR_FIELD("task", "list_len", task.list_len),
      EGLR_FIELD("task", "pool_size", task.pool_size),
      EGLR_FIELD("task", "lists", task.lists),
      EGLR_FIELD("task", "pools", task.pools),
      EGLR_FIELD("task", "test_fraction", task.test_fraction),
      EGLR_FIELD("model", "embed_dim", model.embed_dim),
      EGLR_FIELD("model", "hidden", model.hidden),
      EGLR_FIELD("model", "heads", model.heads),
      EGLR_FIELD("model", "eval_layers", model.eval_layers),
      EGLR_FIELD("eglr", "tau0", eglr.tau0),
      EGLR_FIELD("eglr", "alpha", eglr.alpha),
      EGLR_FIELD("eglr", "entropy_threshold", eglr.entropy_threshold),
      EGLR_FIELD("eglr", "max_reason_steps", eglr.max_reason_steps),
      EGLR_FIELD("eglr", "group_size", eglr.group_size),
      EGLR_FIELD("eglr", "reward_mode", eglr.reward_mode),
      EGLR_FIELD("eglr", "kv_cache", eglr.kv_cache),
      EGLR_FIELD("optim", "lr", optim.lr),
      EGLR_FIELD("optim", "beta1", optim.beta1),
      EGLR_FIELD("optim", "beta2", optim.beta2),
      EGLR_FIELD("optim", "eps", optim.eps),
      EGLR_FIELD("optim", "batch", optim.batch),
      EGLR_FIELD("optim", "eval_epochs", optim.eval_epochs),
      EGLR_FIELD("optim", "gen_iterations", optim.gen_iterations),
      EGLR_FIELD("run", "seed", seed),
  };
  return table;
}

#undef EGLR_FIELD

const Field& find_field(std::string_view dotted) {
  for (const auto& f : fields()) {
    if (f.dotted() == dotted) return f;
  }
  throw ConfigError("unknown config key: " + std::string(dotted));
}

}  // namespace

std::string to_string(RewardMode mode) {
  return mode == RewardMode::kDcg ? "dcg" : "listwise";
}

RewardMode parse_reward_mode(std::string_view text) {
  if (text == "dcg") return RewardMode::kDcg;
  if (text == "listwise") return RewardMode::kListwise;
  throw ConfigError("reward_mode must be dcg or listwise, got '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(world.users > 0 && world.items > 0, "world.users and world.items must be positive");
  require(world.user_fields >= 1 && world.item_fields >= 1, "at least one field per entity");
  require(world.user_field_vocab > 0 && world.item_field_vocab > 0, "field vocabularies must be positive");
  require(world.latent_dim > 0, "world.latent_dim must be positive");
  require(task.list_len >= 1, "task.list_len (K) must be >= 1");
  require(task.list_len <= task.pool_size,
          "K > M: task.list_len (" + std::to_string(task.list_len) +
              ") exceeds task.pool_size (" + std::to_string(task.pool_size) + ")");
  require(task.pool_size <= world.items, "task.pool_size exceeds world.items");
  require(task.test_fraction >= 0.0 && task.test_fraction < 1.0, "task.test_fraction must be in [0,1)");
  require(model.embed_dim > 0 && model.embed_dim % 2 == 0, "model.embed_dim must be positive and even");
  require(model.hidden == model_width(),
          "model.hidden must equal embed_dim * (user_fields + item_fields) = " +
              std::to_string(model_width()));
  require(model.heads > 0 && model_width() % model.heads == 0, "model.heads must divide the model width");
  require(model.eval_layers >= 1, "model.eval_layers must be >= 1");
  require(eglr.tau0 > 0.0, "eglr.tau0 must be > 0");
  require(eglr.alpha >= 1.0, "eglr.alpha must be >= 1");
  require(eglr.entropy_threshold >= 0.0, "eglr.entropy_threshold must be >= 0");
  require(eglr.group_size >= 1, "eglr.group_size (G) must be >= 1");
  require(optim.lr > 0.0, "optim.lr must be > 0");
  require(optim.beta1 >= 0.0 && optim.beta1 < 1.0 && optim.beta2 >= 0.0 && optim.beta2 < 1.0,
          "optim betas must be in [0,1)");
  require(optim.eps > 0.0, "optim.eps must be > 0");
  require(optim.batch >= 1, "optim.batch must be >= 1");
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(*this) << '\n';
  }
  return os.str();
}

ExperimentConfig ExperimentConfig::from_ini(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const auto key = section + "." + std::string(trim(line.substr(0, eq)));
    auto value = trim(line.substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string_view::npos) {
      value = trim(value.substr(0, hash));
    }
    if (!seen.insert(key).second) throw ParseError(line_no, "duplicate key " + key);
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!std::filesystem::exists(path)) throw FileNotFoundError(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = from_ini(ss.str());
  cfg.validate();
  return cfg;
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << to_ini();
}

void ExperimentConfig::set(std::string_view dotted_key, std::string_view value) {
  find_field(dotted_key).set(*this, value);
}

std::string ExperimentConfig::get(std::string_view dotted_key) const {
  return find_field(dotted_key).get(*this);
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.dotted());
  return out;
}

void ExperimentConfig::apply_env_overrides() {
  if (const char* s = std::getenv("EGLR_SEED"); s && *s) {
    seed = parse_value<std::uint64_t>(s, "EGLR_SEED");
  }
}

}  // namespace eglr
