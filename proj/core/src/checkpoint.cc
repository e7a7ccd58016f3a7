// checkpoint.cc

// Copyright 2026  The domexp Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "domexp/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "domexp/errors.h"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace domexp {
namespace {

constexpr char kMagic[4] = {'D', 'X', 'P', 'C'};
enum class Kind : std::uint32_t { kModel = 1, kFisher = 2, kSoftTargets = 3 };

// Sanity bound on counts read from disk (2^40 doubles = 8 TiB).
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 40;

class Writer {
 public:
  explicit Writer(std::ostream &out) : out_(out) {}
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char *>(&v), sizeof v);
  }
  void put_doubles(std::span<const double> v) {
    out_.write(reinterpret_cast<const char *>(v.data()),
               static_cast<std::streamsize>(v.size_bytes()));
  }
  void header(Kind kind) {
    out_.write(kMagic, 4);
    put<std::uint32_t>(kCheckpointVersion);
    put<std::uint32_t>(static_cast<std::uint32_t>(kind));
  }
  void finish() {
    if (!out_) throw Error("checkpoint write failed");
  }

 private:
  std::ostream &out_;
};

class Reader {
 public:
  explicit Reader(std::istream &in) : in_(in) {}
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char *>(&v), sizeof v);
    if (!in_) throw ParseError("truncated checkpoint");
    return v;
  }
  std::uint64_t count() {
    const auto n = get<std::uint64_t>();
    if (n > kMaxCount) throw ParseError("implausible element count in checkpoint");
    return n;
  }
  void get_doubles(std::span<double> v) {
    in_.read(reinterpret_cast<char *>(v.data()),
             static_cast<std::streamsize>(v.size_bytes()));
    if (!in_) throw ParseError("truncated checkpoint payload");
  }
  void header(Kind expected) {
    char magic[4];
    in_.read(magic, 4);
    if (!in_ || std::memcmp(magic, kMagic, 4) != 0)
      throw ParseError("not a domexp checkpoint (bad magic)");
    const auto version = get<std::uint32_t>();
    if (version != kCheckpointVersion)
      throw ParseError("unsupported checkpoint version " + std::to_string(version));
    const auto kind = get<std::uint32_t>();
    if (kind != static_cast<std::uint32_t>(expected))
      throw ParseError("checkpoint holds payload kind " + std::to_string(kind) +
                       ", expected " +
                       std::to_string(static_cast<std::uint32_t>(expected)));
  }

 private:
  std::istream &in_;
};

template <typename Fn>
void with_output(const std::filesystem::path &path, Fn &&fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  fn(out);
}

template <typename Fn>
auto with_input(const std::filesystem::path &path, Fn &&fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return fn(in);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_model(std::ostream &out, const ParamVector &params, std::uint64_t seed) {
  Writer w(out);
  w.header(Kind::kModel);
  const NetConfig &cfg = params.config();
  w.put<std::uint64_t>(seed);
  w.put<std::uint64_t>(cfg.input_dim);
  w.put<std::uint64_t>(cfg.hidden_dims.size());
  for (std::size_t h : cfg.hidden_dims) w.put<std::uint64_t>(h);
  w.put<std::uint64_t>(cfg.num_classes);
  w.put<std::uint64_t>(params.size());
  w.put_doubles(params.flat());
  w.finish();
}

ModelCheckpoint read_model(std::istream &in) {
  Reader r(in);
  r.header(Kind::kModel);
  ModelCheckpoint ck;
  ck.seed = r.get<std::uint64_t>();
  NetConfig cfg;
  cfg.input_dim = r.count();
  const std::uint64_t hidden = r.count();
  for (std::uint64_t i = 0; i < hidden; ++i) cfg.hidden_dims.push_back(r.count());
  cfg.num_classes = r.count();
  try {
    cfg.validate();
  } catch (const InvalidArgument &e) {
    throw ParseError(std::string("checkpoint network config: ") + e.what());
  }
  const std::uint64_t n = r.count();
  if (n != cfg.num_params())
    throw ParseError("checkpoint stores " + std::to_string(n) +
                     " parameters but its config needs " +
                     std::to_string(cfg.num_params()));
  ck.params = ParamVector(cfg);
  r.get_doubles(ck.params.flat());
  return ck;
}

void save_model(const std::filesystem::path &path, const ParamVector &params,
                std::uint64_t seed) {
  with_output(path, [&](std::ostream &o) { write_model(o, params, seed); });
}

ModelCheckpoint load_model(const std::filesystem::path &path) {
  return with_input(path, [](std::istream &i) { return read_model(i); });
}

void write_fisher(std::ostream &out, const FisherDiagonal &fisher) {
  Writer w(out);
  w.header(Kind::kFisher);
  w.put<double>(fisher.offset);
  w.put<std::uint64_t>(fisher.values.size());
  w.put_doubles(fisher.values);
  w.finish();
}

FisherDiagonal read_fisher(std::istream &in) {
  Reader r(in);
  r.header(Kind::kFisher);
  FisherDiagonal f;
  f.offset = r.get<double>();
  f.values.resize(r.count());
  r.get_doubles(f.values);
  return f;
}

void save_fisher(const std::filesystem::path &path, const FisherDiagonal &fisher) {
  with_output(path, [&](std::ostream &o) { write_fisher(o, fisher); });
}

FisherDiagonal load_fisher(const std::filesystem::path &path) {
  return with_input(path, [](std::istream &i) { return read_fisher(i); });
}

void write_soft_targets(std::ostream &out, const SoftTargets &targets) {
  Writer w(out);
  w.header(Kind::kSoftTargets);
  w.put<double>(targets.temperature);
  w.put<std::uint64_t>(targets.probs.rows());
  w.put<std::uint64_t>(targets.probs.cols());
  w.put_doubles(targets.probs.data());
  w.finish();
}

SoftTargets read_soft_targets(std::istream &in) {
  Reader r(in);
  r.header(Kind::kSoftTargets);
  SoftTargets t;
  t.temperature = r.get<double>();
  const std::uint64_t rows = r.count();
  const std::uint64_t cols = r.count();
  if (rows != 0 && cols > kMaxCount / rows) throw ParseError("implausible soft-target shape");
  t.probs = Matrix(rows, cols);
  r.get_doubles(t.probs.data());
  return t;
}

void save_soft_targets(const std::filesystem::path &path, const SoftTargets &targets) {
  with_output(path, [&](std::ostream &o) { write_soft_targets(o, targets); });
}

SoftTargets load_soft_targets(const std::filesystem::path &path) {
  return with_input(path, [](std::istream &i) { return read_soft_targets(i); });
}

}  // namespace domexp
