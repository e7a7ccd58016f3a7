// regularizers.cc

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

#include "domexp/regularizers.h"

#include <cmath>

#include "domexp/errors.h"

namespace domexp {

void RegWeights::validate() const {
  if (!(lambda_w >= 0.0)) throw InvalidArgument("lambda_w must be >= 0");
  if (!(lambda_e >= 0.0)) throw InvalidArgument("lambda_e must be >= 0");
  if (!(lambda_s >= 0.0 && lambda_s <= 1.0))
    throw InvalidArgument("lambda_s must lie in [0, 1], got " +
                          std::to_string(lambda_s));
  if (!(temperature > 0.0))
    throw InvalidArgument("temperature must be > 0, got " +
                          std::to_string(temperature));
}

namespace {

// Shared body of the WCA and EWC penalties; `importance` is null for WCA.
Objective weighted_l2(const ParamVector &theta_n, const ParamVector &theta_o,
                      const FisherDiagonal *fisher, double lambda, const char *what) {
  theta_n.check_same_layout(theta_o, what);
  if (!(lambda >= 0.0)) throw InvalidArgument(std::string(what) + ": lambda must be >= 0");
  if (fisher != nullptr && fisher->size() != theta_n.size())
    throw DimensionError(std::string(what) + ": Fisher diagonal has " +
                         std::to_string(fisher->size()) + " entries for " +
                         std::to_string(theta_n.size()) + " parameters");
  Objective out{0.0, zeros_like(theta_n)};
  std::span<const double> tn = theta_n.flat();
  std::span<const double> to = theta_o.flat();
  std::span<double> g = out.gradient.flat();
  double sum = 0.0;
  for (std::size_t i = 0; i < tn.size(); ++i) {
    const double delta = tn[i] - to[i];
    const double w = fisher != nullptr ? fisher->importance(i) : 1.0;
    sum += w * delta * delta;
    g[i] = lambda * w * delta;
  }
  out.loss = 0.5 * lambda * sum;
  return out;
}

void add_into(ParamVector &acc, const ParamVector &term) {
  std::span<double> a = acc.flat();
  std::span<const double> t = term.flat();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += t[i];
}

void check_labels(const Batch &batch, std::size_t num_classes) {
  if (batch.features.rows != batch.labels.size())
    throw DimensionError("batch has " + std::to_string(batch.features.rows) +
                         " feature rows but " + std::to_string(batch.labels.size()) +
                         " labels");
  if (batch.size() == 0) throw InvalidArgument("empty batch");
  for (int y : batch.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes) + ")");
}

// (1 - lambda_s) * mean CE(labels, softmax(z)) + lambda_s * mean distill.
Objective data_objective(const ParamVector &theta, const Batch &batch,
                         ConstMatrixView soft_rows, double lambda_s,
                         double temperature, DistillForm form, bool t_squared) {
  const std::size_t num_classes = theta.config().num_classes;
  check_labels(batch, num_classes);
  if (!(lambda_s >= 0.0 && lambda_s <= 1.0))
    throw InvalidArgument("lambda_s must lie in [0, 1], got " +
                          std::to_string(lambda_s));

  const ForwardTrace trace = forward(theta, batch.features);
  const Matrix &logits = trace.logits();
  const std::size_t n = batch.size();
  const double ce_scale = (1.0 - lambda_s) / static_cast<double>(n);

  Matrix dlogits(n, num_classes);
  double ce_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> p = softmax_t(logits.row(i), 1.0);
    const std::size_t y = static_cast<std::size_t>(batch.labels[i]);
    ce_sum += cross_entropy(y, p);
    std::span<double> d = dlogits.row(i);
    for (std::size_t c = 0; c < num_classes; ++c)
      d[c] = ce_scale * (p[c] - (c == y ? 1.0 : 0.0));
  }
  double loss = ce_scale * ce_sum;

  if (lambda_s > 0.0) {
    if (soft_rows.rows != n || soft_rows.cols != num_classes)
      throw DimensionError("soft targets " + shape_string(soft_rows.rows, soft_rows.cols) +
                           " do not align with batch logits " +
                           shape_string(n, num_classes));
    const DistillTerm distill = distillation_term(logits, soft_rows, temperature, form);
    double scale = lambda_s / static_cast<double>(n);
    if (t_squared) scale *= temperature * temperature;
    loss += scale * distill.value;
    std::span<double> d = dlogits.data();
    std::span<const double> dd = distill.dlogits.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += scale * dd[k];
  }

  return {loss, backward(theta, trace, dlogits)};
}

}  // namespace

Objective wca_penalty(const ParamVector &theta_n, const ParamVector &theta_o,
                      double lambda_w) {
  return weighted_l2(theta_n, theta_o, nullptr, lambda_w, "wca_penalty");
}

Objective ewc_penalty(const ParamVector &theta_n, const ParamVector &theta_o,
                      const FisherDiagonal &fisher, double lambda_e) {
  return weighted_l2(theta_n, theta_o, &fisher, lambda_e, "ewc_penalty");
}

namespace {

ParamVector per_sample_gradient(const ParamVector &params, const Dataset &data,
                                std::size_t i) {
  const ConstMatrixView x{data.features.row(i), 1, data.feature_dim()};
  const ForwardTrace trace = forward(params, x);
  std::vector<double> d = softmax_t(trace.logits().row(0), 1.0);
  d[static_cast<std::size_t>(data.labels[i])] -= 1.0;
  return backward(params, trace, ConstMatrixView{d, 1, d.size()});
}

}  // namespace

FisherDiagonal estimate_fisher_diagonal(const ParamVector &params,
                                        const Dataset &data, double offset) {
  if (data.size() == 0) throw InvalidArgument("estimate_fisher_diagonal: empty dataset");
  data.validate();
  if (data.num_classes != params.config().num_classes)
    throw DimensionError("estimate_fisher_diagonal: dataset has " +
                         std::to_string(data.num_classes) + " classes, net has " +
                         std::to_string(params.config().num_classes));
  if (!(offset >= 0.0)) throw InvalidArgument("Fisher offset must be >= 0");

  const std::size_t p = params.size();
  const double n = static_cast<double>(data.size());

  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ParamVector g = per_sample_gradient(params, data, i);
    std::span<const double> gf = g.flat();
    for (std::size_t k = 0; k < p; ++k) mean[k] += gf[k];
  }
  for (double &m : mean) m /= n;

  FisherDiagonal fisher{std::vector<double>(p, 0.0), offset};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ParamVector g = per_sample_gradient(params, data, i);
    std::span<const double> gf = g.flat();
    for (std::size_t k = 0; k < p; ++k) {
      const double dev = gf[k] - mean[k];
      fisher.values[k] += dev * dev;
    }
  }
  for (double &v : fisher.values) v /= n;
  return fisher;
}

SoftTargets precompute_soft_targets(const ParamVector &original,
                                    ConstMatrixView features, double temperature) {
  const Matrix logits = forward_logits(original, features);
  return {softmax_rows(logits, temperature), temperature};
}

Objective cross_entropy_loss(const ParamVector &params, const Batch &batch) {
  return data_objective(params, batch, ConstMatrixView{}, 0.0, 1.0,
                        DistillForm::kCrossEntropy, false);
}

DistillTerm distillation_term(ConstMatrixView logits, ConstMatrixView soft,
                              double temperature, DistillForm form) {
  if (logits.rows != soft.rows || logits.cols != soft.cols)
    throw DimensionError("distillation_term: logits " +
                         shape_string(logits.rows, logits.cols) + " vs soft targets " +
                         shape_string(soft.rows, soft.cols));
  DistillTerm out{0.0, Matrix(logits.rows, logits.cols)};
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const std::vector<double> q = softmax_t(logits.row(i), temperature);
    std::span<const double> s = soft.row(i);
    out.value += form == DistillForm::kCrossEntropy ? cross_entropy(s, q)
                                                    : kl_divergence(s, q);
    std::span<double> d = out.dlogits.row(i);
    for (std::size_t c = 0; c < q.size(); ++c) d[c] = (q[c] - s[c]) / temperature;
  }
  return out;
}

Objective skld_loss(const ParamVector &theta_n, const Batch &batch,
                    ConstMatrixView soft_rows, double lambda_s, double temperature,
                    DistillForm form, bool scale_by_t_squared) {
  if (!(temperature > 0.0))
    throw InvalidArgument("skld_loss: temperature must be > 0");
  return data_objective(theta_n, batch, soft_rows, lambda_s, temperature, form,
                        scale_by_t_squared);
}

Objective hybrid_loss(const ParamVector &theta_n, const ParamVector &theta_o,
                      const Batch &batch, ConstMatrixView soft_rows,
                      const FisherDiagonal &fisher, const RegWeights &reg) {
  reg.validate();
  theta_n.check_same_layout(theta_o, "hybrid_loss");
  Objective obj = skld_loss(theta_n, batch, soft_rows, reg.lambda_s, reg.temperature,
                            DistillForm::kCrossEntropy, reg.scale_distill_by_t_squared);
  if (reg.lambda_e > 0.0) {
    const Objective pen = ewc_penalty(theta_n, theta_o, fisher, reg.lambda_e);
    obj.loss += pen.loss;
    add_into(obj.gradient, pen.gradient);
  }
  return obj;
}

}  // namespace domexp
