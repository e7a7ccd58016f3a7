// numkit.cc

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

#include "domexp/numkit.h"

#include <algorithm>
#include <cmath>

#include "domexp/errors.h"

namespace domexp {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw DimensionError("matrix data of length " + std::to_string(data_.size()) +
                         " does not fit shape " + shape_string(rows, cols));
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>> &rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto &r : rows) {
    if (r.size() != cols) throw DimensionError("ragged rows in Matrix::from_rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Matrix affine(ConstMatrixView x, ConstMatrixView w, std::span<const double> b) {
  if (x.cols != w.rows || b.size() != w.cols)
    throw DimensionError("affine: input " + shape_string(x.rows, x.cols) +
                         " incompatible with weights " +
                         shape_string(w.rows, w.cols) + " and bias of length " +
                         std::to_string(b.size()));
  Matrix out(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    std::span<double> o = out.row(i);
    std::copy(b.begin(), b.end(), o.begin());
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      std::span<const double> wk = w.row(k);
      for (std::size_t j = 0; j < w.cols; ++j) o[j] += xik * wk[j];
    }
  }
  return out;
}

Matrix relu(ConstMatrixView x) {
  Matrix out(x.rows, x.cols);
  std::span<double> o = out.data();
  for (std::size_t i = 0; i < x.data.size(); ++i)
    o[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return out;
}

std::vector<double> softmax_t(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw InvalidArgument("softmax temperature must be positive, got " +
                          std::to_string(temperature));
  if (logits.empty()) throw DimensionError("softmax of an empty logit row");
  std::vector<double> p(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) p[c] = logits[c] / temperature;
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double &v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (double &v : p) v /= total;
  return p;
}

Matrix softmax_rows(ConstMatrixView logits, double temperature) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    std::vector<double> p = softmax_t(logits.row(i), temperature);
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

namespace {

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

void check_same_length(std::span<const double> a, std::span<const double> b,
                       const char *op) {
  if (a.size() != b.size())
    throw DimensionError(std::string(op) + ": distributions of length " +
                         std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
}

}  // namespace

double cross_entropy(std::span<const double> target, std::span<const double> pred) {
  check_same_length(target, pred, "cross_entropy");
  double sum = 0.0;
  for (std::size_t c = 0; c < target.size(); ++c) {
    if (target[c] == 0.0) continue;
    sum -= target[c] * floored_log(pred[c]);
  }
  return sum;
}

double cross_entropy(std::size_t label, std::span<const double> pred) {
  if (label >= pred.size())
    throw DimensionError("cross_entropy: label " + std::to_string(label) +
                         " out of range for " + std::to_string(pred.size()) +
                         " classes");
  return -floored_log(pred[label]);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  check_same_length(p, q, "kl_divergence");
  double sum = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] == 0.0) continue;
    sum += p[c] * (floored_log(p[c]) - floored_log(q[c]));
  }
  return sum;
}

double entropy(std::span<const double> p) { return cross_entropy(p, p); }

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("argmax of an empty vector");
  // std::max_element returns the first maximum.
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::uint64_t Rng::mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL)));
}

Rng Rng::split(const std::string &stream) const { return split(fnv1a64(stream)); }

Matrix he_normal(std::size_t rows, std::size_t cols, Rng &rng) {
  if (rows == 0 || cols == 0)
    throw InvalidArgument("he_normal needs a non-empty shape, got " +
                          shape_string(rows, cols));
  const double stddev = std::sqrt(2.0 / static_cast<double>(rows));
  Matrix w(rows, cols);
  for (double &v : w.data()) v = stddev * rng.normal();
  return w;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace domexp
