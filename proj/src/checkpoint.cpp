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

#include "eglr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "eglr/errors.hpp"

namespace eglr {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'E', 'G', 'L', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename T>
  T get() {
    T value{};
    read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
  }

  std::string get_string(std::size_t limit = std::size_t{1} << 24) {
    const auto n = get<std::uint32_t>();
    if (n > limit) throw CheckpointError(path_ + ": implausible string length");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  void read(char* dst, std::size_t n) {
    if (!in_.read(dst, static_cast<std::streamsize>(n))) {
      throw CheckpointError(path_ + ": truncated checkpoint");
    }
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kEvaluator:
      return "evaluator";
    case ModelKind::kGenerator:
      return "generator";
  }
  return "unknown";
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.kind));
  put_string(out, ckpt.config.to_ini());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto dim : t.shape()) put<std::uint64_t>(out, dim);
    const auto data = t.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!std::filesystem::exists(path)) throw FileNotFoundError(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  Reader r(in, path);
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path + ": not an EGLR checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(path + ": checkpoint version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  const auto kind = r.get<std::uint32_t>();
  if (kind != 1 && kind != 2) throw CheckpointError(path + ": unknown model kind " + std::to_string(kind));
  ckpt.kind = static_cast<ModelKind>(kind);
  try {
    ckpt.config = ExperimentConfig::from_ini(r.get_string());
  } catch (const ParseError& e) {
    throw CheckpointError(path + ": embedded config: " + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.get_string(4096);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 2) throw CheckpointError(path + ": tensor '" + name + "' has unsupported rank");
    Shape shape(rank);
    for (auto& dim : shape) dim = r.get<std::uint64_t>();
    const std::size_t n = shape_numel(shape);
    if (n > (std::size_t{1} << 32)) throw CheckpointError(path + ": tensor '" + name + "' is implausibly large");
    std::vector<double> data(n);
    r.read(reinterpret_cast<char*>(data.data()), n * sizeof(double));
    if (ckpt.params.contains(name)) throw CheckpointError(path + ": duplicate tensor '" + name + "'");
    ckpt.params.add(std::move(name), Tensor::from(std::move(data), std::move(shape)));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(path + ": trailing bytes");
  return ckpt;
}

void require_same_layout(const ParameterSet& expected, const ParameterSet& actual,
                         const std::string& what) {
  for (const auto& [name, t] : expected) {
    if (!actual.contains(name)) throw CheckpointError(what + ": missing tensor '" + name + "'");
    if (actual.get(name).shape() != t.shape()) {
      throw CheckpointError(what + ": tensor '" + name + "' has shape " +
                            shape_str(actual.get(name).shape()) + ", expected " + shape_str(t.shape()));
    }
  }
  if (actual.size() != expected.size()) {
    for (const auto& [name, t] : actual) {
      if (!expected.contains(name)) throw CheckpointError(what + ": unexpected tensor '" + name + "'");
    }
  }
}

}  // namespace eglr
