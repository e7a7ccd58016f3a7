// domexp/dataset.h

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

#ifndef DOMEXP_DATASET_H_
#define DOMEXP_DATASET_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "domexp/numkit.h"

namespace domexp {

/// Labelled feature matrix drawn from one domain.
struct Dataset {
  Matrix features;          // [num_samples x feature_dim]
  std::vector<int> labels;  // one per row, in [0, num_classes)
  std::size_t num_classes = 0;
  std::string domain_tag;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }

  /// Throws InvalidArgument on an empty set, a row/label count mismatch or a
  /// label outside [0, num_classes).
  void validate() const;

  /// Rows `indices` (in that order) as a new dataset with the same tag.
  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset &) const = default;
};

/// Non-owning minibatch: features plus the matching hard labels.
struct Batch {
  ConstMatrixView features;
  std::span<const int> labels;

  std::size_t size() const { return labels.size(); }
};

inline Batch as_batch(const Dataset &d) { return {d.features, d.labels}; }

}  // namespace domexp

#endif  // DOMEXP_DATASET_H_
