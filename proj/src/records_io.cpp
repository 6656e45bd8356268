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

#include <filesystem>
#include <fstream>
#include <functional>

#include "eglr/errors.hpp"
#include "eglr/sim.hpp"
#include "json.hpp"

namespace eglr {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// Calls `fn(object, line_no)` for every non-blank line; wraps any failure
// into a ParseError carrying the line number.
void for_each_line(const std::string& path, const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!std::filesystem::exists(path)) throw FileNotFoundError(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("expected a JSON object");
      fn(obj, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line_no, path + ": " + e.what());
    }
  }
}

InteractionRecord interaction_from_json(const json& j) {
  InteractionRecord r;
  r.user_id = j.at("user_id").get<int>();
  r.items = j.at("items").get<std::vector<int>>();
  r.y_point = j.at("y_point").get<std::vector<int>>();
  r.y_list = j.at("y_list").get<double>();
  r.validate();
  return r;
}

}  // namespace

void write_interactions(const std::string& path, std::span<const InteractionRecord> records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    r.validate();
    json j = {{"user_id", r.user_id}, {"items", r.items}, {"y_point", r.y_point}, {"y_list", r.y_list}};
    out << j.dump() << '\n';
  }
}

std::vector<InteractionRecord> read_interactions(const std::string& path) {
  std::vector<InteractionRecord> out;
  for_each_line(path, [&](const json& j, std::size_t) { out.push_back(interaction_from_json(j)); });
  return out;
}

void write_pools(const std::string& path, std::span<const CandidatePoolRecord> records) {
  auto out = open_out(path);
  for (const auto& r : records) {
    r.validate();
    json j = {{"user_id", r.user_id}, {"candidates", r.candidates}};
    out << j.dump() << '\n';
  }
}

std::vector<CandidatePoolRecord> read_pools(const std::string& path) {
  std::vector<CandidatePoolRecord> out;
  for_each_line(path, [&](const json& j, std::size_t) {
    CandidatePoolRecord r;
    r.user_id = j.at("user_id").get<int>();
    r.candidates = j.at("candidates").get<std::vector<int>>();
    r.validate();
    out.push_back(std::move(r));
  });
  return out;
}

void write_world(const std::string& path, const World& world) {
  auto out = open_out(path);
  const auto& c = world.config;
  json header = {{"kind", "world"},
                 {"users", c.users},
                 {"items", c.items},
                 {"user_fields", c.user_fields},
                 {"item_fields", c.item_fields},
                 {"user_field_vocab", c.user_field_vocab},
                 {"item_field_vocab", c.item_field_vocab},
                 {"latent_dim", c.latent_dim},
                 {"coef", {c.coef_a, c.coef_b, c.coef_c, c.coef_d0}}};
  out << header.dump() << '\n';
  for (const auto& u : world.users) {
    out << json{{"kind", "user"}, {"id", u.user_id}, {"features", u.feature_ids}, {"latent", u.latent}}.dump()
        << '\n';
  }
  for (const auto& i : world.items) {
    out << json{{"kind", "item"}, {"id", i.item_id}, {"features", i.feature_ids}, {"latent", i.latent}}.dump()
        << '\n';
  }
}

World read_world(const std::string& path) {
  World w;
  bool have_header = false;
  for_each_line(path, [&](const json& j, std::size_t) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "world") {
      auto& c = w.config;
      c.users = j.at("users").get<std::size_t>();
      c.items = j.at("items").get<std::size_t>();
      c.user_fields = j.at("user_fields").get<std::size_t>();
      c.item_fields = j.at("item_fields").get<std::size_t>();
      c.user_field_vocab = j.at("user_field_vocab").get<std::size_t>();
      c.item_field_vocab = j.at("item_field_vocab").get<std::size_t>();
      c.latent_dim = j.at("latent_dim").get<std::size_t>();
      const auto coef = j.at("coef").get<std::vector<double>>();
      if (coef.size() != 4) throw std::invalid_argument("coef must have 4 entries");
      c.coef_a = coef[0];
      c.coef_b = coef[1];
      c.coef_c = coef[2];
      c.coef_d0 = coef[3];
      have_header = true;
      return;
    }
    if (!have_header) throw std::invalid_argument("world header must come first");
    const int id = j.at("id").get<int>();
    auto features = j.at("features").get<std::vector<int>>();
    auto latent = j.at("latent").get<std::vector<double>>();
    if (kind == "user") {
      if (id != static_cast<int>(w.users.size())) throw std::invalid_argument("user ids must be dense and ordered");
      if (features.size() != w.config.user_fields) throw std::invalid_argument("user feature count mismatch");
      w.users.push_back({id, std::move(features), std::move(latent)});
    } else if (kind == "item") {
      if (id != static_cast<int>(w.items.size())) throw std::invalid_argument("item ids must be dense and ordered");
      if (features.size() != w.config.item_fields) throw std::invalid_argument("item feature count mismatch");
      w.items.push_back({id, std::move(features), std::move(latent)});
    } else {
      throw std::invalid_argument("unknown kind '" + kind + "'");
    }
  });
  if (!have_header) throw ParseError(1, path + ": missing world header");
  if (w.users.size() != w.config.users || w.items.size() != w.config.items) {
    throw ParseError(0, path + ": entity counts do not match header");
  }
  return w;
}

}  // namespace eglr
