// net.cc

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

#include "domexp/net.h"

#include <algorithm>

#include "domexp/errors.h"

namespace domexp {

void NetConfig::validate() const {
  if (input_dim == 0) throw InvalidArgument("net: input_dim must be >= 1");
  if (num_classes == 0) throw InvalidArgument("net: num_classes must be >= 1");
  for (std::size_t h : hidden_dims)
    if (h == 0) throw InvalidArgument("net: hidden layer width must be >= 1");
}

std::vector<std::pair<std::size_t, std::size_t>> NetConfig::layer_shapes() const {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::size_t in = input_dim;
  for (std::size_t h : hidden_dims) {
    shapes.emplace_back(in, h);
    in = h;
  }
  shapes.emplace_back(in, num_classes);
  return shapes;
}

std::size_t NetConfig::num_params() const {
  std::size_t n = 0;
  for (auto [in, out] : layer_shapes()) n += in * out + out;
  return n;
}

ParamVector::ParamVector(const NetConfig &config) : config_(config) {
  config_.validate();
  std::size_t offset = 0;
  for (auto [in, out] : config_.layer_shapes()) {
    LayerLayout l{in, out, offset, offset + in * out};
    layout_.push_back(l);
    offset = l.bias_offset + out;
  }
  values_.assign(offset, 0.0);
}

MatrixView ParamVector::weights(std::size_t layer) {
  const LayerLayout &l = layout_.at(layer);
  return {std::span<double>(values_).subspan(l.weight_offset, l.in * l.out), l.in,
          l.out};
}

ConstMatrixView ParamVector::weights(std::size_t layer) const {
  const LayerLayout &l = layout_.at(layer);
  return {std::span<const double>(values_).subspan(l.weight_offset, l.in * l.out),
          l.in, l.out};
}

std::span<double> ParamVector::bias(std::size_t layer) {
  const LayerLayout &l = layout_.at(layer);
  return std::span<double>(values_).subspan(l.bias_offset, l.out);
}

std::span<const double> ParamVector::bias(std::size_t layer) const {
  const LayerLayout &l = layout_.at(layer);
  return std::span<const double>(values_).subspan(l.bias_offset, l.out);
}

void ParamVector::check_same_layout(const ParamVector &other, const char *what) const {
  if (!same_layout(other))
    throw DimensionError(std::string(what) + ": parameter layouts differ (" +
                         std::to_string(size()) + " vs " +
                         std::to_string(other.size()) + " parameters)");
}

ParamVector zeros_like(const ParamVector &like) { return ParamVector(like.config()); }

ForwardTrace forward(const ParamVector &params, ConstMatrixView x) {
  if (x.cols != params.config().input_dim)
    throw DimensionError("forward: input " + shape_string(x.rows, x.cols) +
                         " but the net expects " +
                         std::to_string(params.config().input_dim) + " features");
  ForwardTrace trace;
  trace.activations.reserve(params.num_layers());
  trace.pre_activations.reserve(params.num_layers());
  trace.activations.emplace_back(x.rows, x.cols,
                                 std::vector<double>(x.data.begin(), x.data.end()));
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    trace.pre_activations.push_back(
        affine(trace.activations.back(), params.weights(l), params.bias(l)));
    if (l + 1 < params.num_layers())
      trace.activations.push_back(relu(trace.pre_activations.back()));
  }
  return trace;
}

Matrix forward_logits(const ParamVector &params, ConstMatrixView x) {
  if (x.cols != params.config().input_dim)
    throw DimensionError("forward: input " + shape_string(x.rows, x.cols) +
                         " but the net expects " +
                         std::to_string(params.config().input_dim) + " features");
  Matrix h = affine(x, params.weights(0), params.bias(0));
  for (std::size_t l = 1; l < params.num_layers(); ++l)
    h = affine(relu(h), params.weights(l), params.bias(l));
  return h;
}

ParamVector backward(const ParamVector &params, const ForwardTrace &trace,
                     ConstMatrixView dloss_dlogits) {
  const std::size_t layers = params.num_layers();
  if (trace.pre_activations.size() != layers || trace.activations.size() != layers)
    throw DimensionError("backward: trace has " +
                         std::to_string(trace.pre_activations.size()) +
                         " layers, net has " + std::to_string(layers));
  const Matrix &logits = trace.logits();
  if (dloss_dlogits.rows != logits.rows() || dloss_dlogits.cols != logits.cols())
    throw DimensionError("backward: upstream gradient " +
                         shape_string(dloss_dlogits.rows, dloss_dlogits.cols) +
                         " does not match logits " +
                         shape_string(logits.rows(), logits.cols()));
  for (std::size_t l = 0; l < layers; ++l) {
    const LayerLayout &lay = params.layout(l);
    if (trace.activations[l].cols() != lay.in ||
        trace.pre_activations[l].cols() != lay.out)
      throw DimensionError("backward: stale trace at layer " + std::to_string(l));
  }

  ParamVector grad = zeros_like(params);
  const std::size_t batch = dloss_dlogits.rows;
  Matrix delta(batch, dloss_dlogits.cols,
               std::vector<double>(dloss_dlogits.data.begin(), dloss_dlogits.data.end()));

  for (std::size_t l = layers; l-- > 0;) {
    const Matrix &input = trace.activations[l];
    MatrixView gw = grad.weights(l);
    std::span<double> gb = grad.bias(l);
    for (std::size_t i = 0; i < batch; ++i) {
      std::span<const double> d = delta.row(i);
      std::span<const double> a = input.row(i);
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double ak = a[k];
        if (ak == 0.0) continue;
        std::span<double> gwk = gw.row(k);
        for (std::size_t j = 0; j < d.size(); ++j) gwk[j] += ak * d[j];
      }
      for (std::size_t j = 0; j < d.size(); ++j) gb[j] += d[j];
    }
    if (l == 0) break;

    // delta_prev = (delta * W^T) masked by relu'(pre_activation of layer l-1).
    ConstMatrixView w = params.weights(l);
    const Matrix &pre = trace.pre_activations[l - 1];
    Matrix prev(batch, w.rows);
    for (std::size_t i = 0; i < batch; ++i) {
      std::span<const double> d = delta.row(i);
      std::span<double> p = prev.row(i);
      std::span<const double> z = pre.row(i);
      for (std::size_t k = 0; k < w.rows; ++k) {
        if (!(z[k] > 0.0)) continue;
        std::span<const double> wk = w.row(k);
        double s = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) s += wk[j] * d[j];
        p[k] = s;
      }
    }
    delta = std::move(prev);
  }
  return grad;
}

ParamVector init(const NetConfig &config, Rng &rng) {
  ParamVector params(config);
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const LayerLayout &lay = params.layout(l);
    Matrix w = he_normal(lay.in, lay.out, rng);
    std::copy(w.data().begin(), w.data().end(), params.weights(l).data.begin());
  }
  return params;
}

}  // namespace domexp
