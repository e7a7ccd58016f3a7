// trainer.cc

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

#include "domexp/trainer.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "domexp/errors.h"

namespace domexp {

void adam_step(ParamVector &params, const ParamVector &grads, AdamState &state,
               double lr) {
  params.check_same_layout(grads, "adam_step");
  params.check_same_layout(state.m, "adam_step (first moment)");
  params.check_same_layout(state.v, "adam_step (second moment)");
  if (!(lr > 0.0)) throw InvalidArgument("adam_step: learning rate must be > 0");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  std::span<double> theta = params.flat();
  std::span<const double> g = grads.flat();
  std::span<double> m = state.m.flat();
  std::span<double> v = state.v.flat();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (fixed_epochs == 0) throw ConfigError("fixed_epochs must be >= 1");
}

double EpochLog::error(std::string_view name) const {
  for (const auto &[n, e] : eval_errors)
    if (n == name) return e;
  throw InvalidArgument("epoch log has no eval set named '" + std::string(name) + "'");
}

void write_epoch_log_csv(std::ostream &os, std::span<const EpochLog> log) {
  os << "epoch,train_loss";
  if (!log.empty())
    for (const auto &[name, err] : log.front().eval_errors)
      os << ",eval_" << name << "_error";
  os << '\n';
  char buf[64];
  for (const EpochLog &row : log) {
    os << row.epoch;
    std::snprintf(buf, sizeof buf, ",%.17g", row.train_loss);
    os << buf;
    for (const auto &[name, err] : row.eval_errors) {
      std::snprintf(buf, sizeof buf, ",%.17g", err);
      os << buf;
    }
    os << '\n';
  }
}

double evaluate(const ParamVector &params, const Dataset &data) {
  if (data.size() == 0) throw InvalidArgument("evaluate: empty dataset");
  const Matrix logits = forward_logits(params, data.features);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    // argmax of softmax(z, 1) equals argmax of z, including tie order.
    if (argmax(logits.row(i)) != static_cast<std::size_t>(data.labels[i])) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

namespace {

Matrix gather_rows(ConstMatrixView m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::span<const double> src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> gather_labels(std::span<const int> labels,
                               std::span<const std::size_t> rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
  return out;
}

void check_compatible(const NetConfig &net, const Dataset &d, const char *what) {
  if (d.size() == 0) throw InvalidArgument(std::string(what) + ": empty dataset");
  d.validate();
  if (d.feature_dim() != net.input_dim)
    throw DimensionError(std::string(what) + ": dataset '" + d.domain_tag + "' has " +
                         std::to_string(d.feature_dim()) + " features, net expects " +
                         std::to_string(net.input_dim));
  if (d.num_classes > net.num_classes)
    throw InvalidArgument(std::string(what) + ": dataset '" + d.domain_tag +
                          "' has labels up to " + std::to_string(d.num_classes) +
                          " classes, net has " + std::to_string(net.num_classes));
}

// Runs one epoch of minibatch updates in `order`, returns the mean batch loss.
template <typename ObjectiveFn>
double run_epoch(ParamVector &params, AdamState &adam, const Dataset &data,
                 std::span<const std::size_t> order, const TrainConfig &config,
                 ObjectiveFn &&objective, std::size_t &step,
                 const StepObserver &observer) {
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    std::span<const std::size_t> rows = order.subspan(start, end - start);
    const Matrix x = gather_rows(data.features, rows);
    const std::vector<int> y = gather_labels(data.labels, rows);
    const Objective obj = objective(Batch{x, y}, rows);
    adam_step(params, obj.gradient, adam, config.learning_rate);
    loss_sum += obj.loss;
    ++batches;
    ++step;
    if (observer) observer(step, params);
  }
  return loss_sum / static_cast<double>(batches);
}

}  // namespace

TrainResult train_original(const NetConfig &net, const Dataset &train,
                           const Dataset &dev, const TrainConfig &config) {
  config.validate();
  net.validate();
  check_compatible(net, train, "train_original");
  check_compatible(net, dev, "train_original (dev)");

  const Rng root(config.seed);
  Rng init_rng = root.split("init");
  Rng shuffle_rng = root.split("shuffle");

  ParamVector params = init(net, init_rng);
  AdamState adam = AdamState::for_params(params);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{params, {}};
  double best_error = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t step = 0;
  auto objective = [&](const Batch &b, std::span<const std::size_t>) {
    return cross_entropy_loss(params, b);
  };
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    const double loss =
        run_epoch(params, adam, train, order, config, objective, step, {});
    const double dev_error = evaluate(params, dev);
    result.log.push_back({epoch, loss, {{"dev", dev_error}}});
    if (dev_error < best_error) {
      best_error = dev_error;
      result.params = params;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= config.early_stop_patience) break;
  }
  return result;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kFineTune: return "fine-tune";
    case Method::kWca: return "wca";
    case Method::kEwc: return "ewc";
    case Method::kSkld: return "skld";
    case Method::kSkldEwc: return "skld-ewc";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Method m : {Method::kFineTune, Method::kWca, Method::kEwc, Method::kSkld,
                   Method::kSkldEwc})
    if (lower == method_name(m)) return m;
  if (lower == "finetune" || lower == "ft") return Method::kFineTune;
  if (lower == "hybrid") return Method::kSkldEwc;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool method_needs_fisher(Method m) { return m == Method::kEwc || m == Method::kSkldEwc; }

bool method_needs_soft_targets(Method m) {
  return m == Method::kSkld || m == Method::kSkldEwc;
}

void ExpansionSpec::validate() const {
  try {
    weights.validate();
  } catch (const InvalidArgument &e) {
    throw ConfigError(e.what());
  }
  if (method_needs_fisher(method) && fisher == nullptr)
    throw ConfigError(std::string(method_name(method)) + " requires a Fisher diagonal");
  if (method_needs_soft_targets(method) && soft_targets == nullptr)
    throw ConfigError(std::string(method_name(method)) + " requires soft targets");
  if (method_needs_soft_targets(method) &&
      soft_targets->temperature != weights.temperature)
    throw ConfigError("soft targets were computed at T = " +
                      std::to_string(soft_targets->temperature) +
                      " but the method runs at T = " +
                      std::to_string(weights.temperature));
}

Objective expansion_objective(const ExpansionSpec &spec, const ParamVector &theta_n,
                              const ParamVector &theta_o, const Batch &batch,
                              ConstMatrixView soft_rows) {
  const RegWeights &w = spec.weights;
  switch (spec.method) {
    case Method::kFineTune:
      return cross_entropy_loss(theta_n, batch);
    case Method::kWca: {
      Objective obj = cross_entropy_loss(theta_n, batch);
      if (w.lambda_w > 0.0) {
        const Objective pen = wca_penalty(theta_n, theta_o, w.lambda_w);
        obj.loss += pen.loss;
        std::span<double> g = obj.gradient.flat();
        std::span<const double> pg = pen.gradient.flat();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += pg[i];
      }
      return obj;
    }
    case Method::kEwc: {
      RegWeights ewc_only = w;
      ewc_only.lambda_s = 0.0;
      return hybrid_loss(theta_n, theta_o, batch, soft_rows, *spec.fisher, ewc_only);
    }
    case Method::kSkld:
      return skld_loss(theta_n, batch, soft_rows, w.lambda_s, w.temperature,
                       DistillForm::kCrossEntropy, w.scale_distill_by_t_squared);
    case Method::kSkldEwc:
      return hybrid_loss(theta_n, theta_o, batch, soft_rows, *spec.fisher, w);
  }
  throw ConfigError("unhandled method");
}

TrainResult expand_domain(const ParamVector &theta_o, const Dataset &new_train,
                          const ExpansionSpec &spec, const TrainConfig &config,
                          std::span<const NamedSet> eval_sets,
                          const StepObserver &observer) {
  config.validate();
  spec.validate();
  check_compatible(theta_o.config(), new_train, "expand_domain");
  if (spec.fisher != nullptr && method_needs_fisher(spec.method) &&
      spec.fisher->size() != theta_o.size())
    throw ConfigError("Fisher diagonal does not match the model's parameter count");
  if (spec.soft_targets != nullptr && method_needs_soft_targets(spec.method) &&
      (spec.soft_targets->probs.rows() != new_train.size() ||
       spec.soft_targets->probs.cols() != theta_o.config().num_classes))
    throw ConfigError("soft targets are not aligned with the new-domain training set");
  for (const NamedSet &s : eval_sets) {
    if (s.data == nullptr) throw ConfigError("eval set '" + s.name + "' is null");
    check_compatible(theta_o.config(), *s.data, "expand_domain (eval)");
  }

  const bool uses_soft = method_needs_soft_targets(spec.method);
  Rng shuffle_rng = Rng(config.seed).split("shuffle");
  ParamVector params = clone_params(theta_o);
  AdamState adam = AdamState::for_params(params);

  auto objective = [&](const Batch &b, std::span<const std::size_t> rows) {
    Matrix soft;
    if (uses_soft) soft = gather_rows(spec.soft_targets->probs, rows);
    return expansion_objective(spec, params, theta_o, b, soft);
  };
  auto eval_row = [&](std::size_t epoch, double loss) {
    EpochLog row{epoch, loss, {}};
    for (const NamedSet &s : eval_sets)
      row.eval_errors.emplace_back(s.name, evaluate(params, *s.data));
    return row;
  };

  std::vector<std::size_t> order(new_train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  {
    // Epoch 0: objective of theta_o itself over the unshuffled set.
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> rows =
          std::span<const std::size_t>(order).subspan(start, end - start);
      const Matrix x = gather_rows(new_train.features, rows);
      const std::vector<int> y = gather_labels(new_train.labels, rows);
      loss_sum += objective(Batch{x, y}, rows).loss;
      ++batches;
    }
    result.log.push_back(eval_row(0, loss_sum / static_cast<double>(batches)));
  }

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.fixed_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    const double loss =
        run_epoch(params, adam, new_train, order, config, objective, step, observer);
    if (!std::isfinite(loss))
      throw Error("expand_domain: non-finite training loss at epoch " +
                  std::to_string(epoch));
    result.log.push_back(eval_row(epoch, loss));
  }
  result.params = std::move(params);
  return result;
}

}  // namespace domexp
