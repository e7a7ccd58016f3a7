// domexp/net.h

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

#ifndef DOMEXP_NET_H_
#define DOMEXP_NET_H_

#include <cstddef>
#include <span>
#include <vector>

#include "domexp/numkit.h"

namespace domexp {

/// Shape of a fully connected ReLU classifier: input -> hidden... -> logits.
/// An empty `hidden_dims` gives a single affine layer.
struct NetConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t num_classes = 0;

  /// Throws InvalidArgument if any dimension is zero.
  void validate() const;
  std::size_t num_layers() const { return hidden_dims.size() + 1; }
  /// (fan_in, fan_out) of every layer in order.
  std::vector<std::pair<std::size_t, std::size_t>> layer_shapes() const;
  std::size_t num_params() const;

  bool operator==(const NetConfig &) const = default;
};

/// Where one layer lives inside the flat parameter array. The weight block is
/// a row-major [in x out] matrix followed by the bias of length `out`.
struct LayerLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

// All learnable scalars of a network stored contiguously. The per-layer
// accessors are views into the same storage, so writes through weights()/bias()
// are visible in flat() and vice versa. Copying is a deep copy.
class ParamVector {
 public:
  ParamVector() = default;
  /// All-zero parameters for `config`.
  explicit ParamVector(const NetConfig &config);

  const NetConfig &config() const { return config_; }
  std::size_t size() const { return values_.size(); }
  std::size_t num_layers() const { return layout_.size(); }
  const LayerLayout &layout(std::size_t layer) const { return layout_[layer]; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  MatrixView weights(std::size_t layer);
  ConstMatrixView weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  bool same_layout(const ParamVector &other) const {
    return config_ == other.config_;
  }
  /// Throws DimensionError naming `what` if the layouts differ.
  void check_same_layout(const ParamVector &other, const char *what) const;

  bool operator==(const ParamVector &other) const {
    return config_ == other.config_ && values_ == other.values_;
  }

 private:
  NetConfig config_;
  std::vector<LayerLayout> layout_;
  std::vector<double> values_;
};

/// Zeros with the same layout as `like`.
ParamVector zeros_like(const ParamVector &like);

/// Deep copy. Provided for call sites that want the snapshot to be explicit.
inline ParamVector clone_params(const ParamVector &params) { return params; }

/// Cached forward pass. activations[0] is the input; activations[l + 1] is the
/// ReLU output of hidden layer l. pre_activations[l] is the affine output of
/// layer l; the last one holds the logits.
struct ForwardTrace {
  std::vector<Matrix> activations;
  std::vector<Matrix> pre_activations;

  const Matrix &logits() const { return pre_activations.back(); }
};

/// Hidden layers use ReLU; the output layer is affine only (no softmax).
ForwardTrace forward(const ParamVector &params, ConstMatrixView x);

/// Logits only, without keeping the intermediate activations.
Matrix forward_logits(const ParamVector &params, ConstMatrixView x);

/// Backpropagates `dloss_dlogits` through the cached trace and returns the
/// gradient of the loss w.r.t. every parameter, summed over the batch. The
/// ReLU derivative at exactly zero is taken as zero.
ParamVector backward(const ParamVector &params, const ForwardTrace &trace,
                     ConstMatrixView dloss_dlogits);

/// He-normal weights, zero biases.
ParamVector init(const NetConfig &config, Rng &rng);

}  // namespace domexp

#endif  // DOMEXP_NET_H_
