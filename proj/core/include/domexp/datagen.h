// domexp/datagen.h

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

#ifndef DOMEXP_DATAGEN_H_
#define DOMEXP_DATAGEN_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domexp/dataset.h"

namespace domexp {

// Synthetic domain. All domains built from the same `seed` share one base
// layout of class means; `domain_shift` then moves that layout by a fixed
// random offset direction (scaled by shift * offset_scale) and rotates it by
// disjoint plane rotations with angle shift * rotation_scale. A shift of 0
// reproduces the base layout.
struct DomainSpec {
  std::string name = "original";
  std::size_t num_classes = 8;
  std::size_t feature_dim = 20;
  std::size_t samples_per_class = 75;
  double class_center_scale = 1.0;
  double domain_shift = 0.0;
  double offset_scale = 1.0;
  double rotation_scale = 0.5;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Balanced Gaussian classes around the shifted means, rows grouped by class.
/// The sample noise stream depends on (seed, name), the layout only on seed.
Dataset generate_domain(const DomainSpec &spec);

/// Row t of the output concatenates frames t-context ... t+context; indices
/// outside [0, T) replicate the nearest edge frame.
Matrix stack_frames(ConstMatrixView frames, std::size_t context = 5);

struct FeatureFileOptions {
  /// Number of classes; inferred as max label + 1 when unset.
  std::optional<std::size_t> num_classes;
  /// Apply stack_frames with this context to the feature rows, in file order.
  std::optional<std::size_t> stack_context;
  std::string domain_tag;
};

/// Parses `label,f0,...,f{d-1}` CSV (header required). Throws ParseError with
/// the offending line number for ragged rows, non-numeric fields and
/// out-of-range labels; an empty file or a header-only file is an error.
Dataset load_feature_file(const std::filesystem::path &path,
                          const FeatureFileOptions &options = {});
Dataset parse_feature_csv(std::istream &in, const FeatureFileOptions &options = {});

/// Writes the same format with round-trip (%.17g) precision.
void save_feature_file(const std::filesystem::path &path, const Dataset &data);
void write_feature_csv(std::ostream &out, const Dataset &data);

/// Concatenation in argument order. domain_tag becomes "pooled".
Dataset pool(std::span<const Dataset> datasets);

struct SplitFractions {
  double train = 4.0 / 6.0;
  double dev = 1.0 / 6.0;
  double eval = 1.0 / 6.0;
};

struct DatasetSplit {
  Dataset train;
  Dataset dev;
  Dataset eval;
};

/// Stratified by class: each class's rows are shuffled with `seed` and cut
/// with cumulative rounding so every part gets within one sample of its
/// share per class. Parts keep the original relative row order. Throws
/// InvalidArgument if a fraction is non-positive, they do not sum to 1, or
/// any part would be empty.
DatasetSplit split(const Dataset &data, const SplitFractions &fractions,
                   std::uint64_t seed);

/// Per-class sample counts.
std::vector<std::size_t> class_histogram(const Dataset &data);

}  // namespace domexp

#endif  // DOMEXP_DATAGEN_H_
