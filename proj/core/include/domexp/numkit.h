// domexp/numkit.h

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

#ifndef DOMEXP_NUMKIT_H_
#define DOMEXP_NUMKIT_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace domexp {

/// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbFloor = 1e-12;

/// Read-only row-major view over `rows * cols` doubles.
struct ConstMatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  std::span<const double> row(std::size_t r) const {
    return data.subspan(r * cols, cols);
  }
};

/// Mutable row-major view; converts to ConstMatrixView.
struct MatrixView {
  std::span<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double &operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  std::span<double> row(std::size_t r) const {
    return data.subspan(r * cols, cols);
  }
  operator ConstMatrixView() const { return {data, rows, cols}; }
};

/// Dense row-major matrix of doubles that owns its storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Throws DimensionError if data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Row-by-row construction; all rows must have the same length.
  static Matrix from_rows(const std::vector<std::vector<double>> &rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double &operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  MatrixView view() { return {data_, rows_, cols_}; }
  ConstMatrixView view() const { return {data_, rows_, cols_}; }
  operator ConstMatrixView() const { return view(); }

  bool operator==(const Matrix &other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(std::size_t rows, std::size_t cols);

/// out = x * w + b, b broadcast over rows.
Matrix affine(ConstMatrixView x, ConstMatrixView w, std::span<const double> b);

/// Elementwise max(0, x).
Matrix relu(ConstMatrixView x);

/// Temperature softmax of one logit row. The logits are divided by T first
/// and the maximum scaled logit subtracted before exponentiation, so
/// softmax_t(z, T) and softmax_t(z / T, 1) are bit-identical.
/// Throws InvalidArgument unless T > 0.
std::vector<double> softmax_t(std::span<const double> logits, double temperature);

/// Row-wise softmax_t over a matrix of logits.
Matrix softmax_rows(ConstMatrixView logits, double temperature);

/// -sum_c target_c * log(max(pred_c, kProbFloor)).
double cross_entropy(std::span<const double> target, std::span<const double> pred);

/// -log(max(pred[label], kProbFloor)).
double cross_entropy(std::size_t label, std::span<const double> pred);

/// sum_c p_c * (log p_c - log q_c) with 0 log 0 = 0 and the same floor as
/// cross_entropy, so cross_entropy(p, q) == kl_divergence(p, q) + entropy(p)
/// up to rounding.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Shannon entropy in nats; equals cross_entropy(p, p).
double entropy(std::span<const double> p);

/// Index of the largest entry, ties broken toward the lowest index.
std::size_t argmax(std::span<const double> v);

/// Seeded 64-bit generator. Streams are derived with split(), never from
/// any global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }
  /// Independent child generator keyed by `stream`; depends only on
  /// (seed, stream), not on how much of this generator was consumed.
  Rng split(std::uint64_t stream) const;
  Rng split(const std::string &stream) const;

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64 &engine() { return engine_; }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// rows x cols matrix of N(0, 2 / rows) draws; rows is the fan-in.
Matrix he_normal(std::size_t rows, std::size_t cols, Rng &rng);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace domexp

#endif  // DOMEXP_NUMKIT_H_
