// domexp/trainer.h

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

#ifndef DOMEXP_TRAINER_H_
#define DOMEXP_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "domexp/dataset.h"
#include "domexp/net.h"
#include "domexp/regularizers.h"

namespace domexp {

/// Bias-corrected Adam moments.
struct AdamState {
  ParamVector m;
  ParamVector v;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const ParamVector &params) {
    return {zeros_like(params), zeros_like(params)};
  }
};

/// One Adam update in place:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(ParamVector &params, const ParamVector &grads, AdamState &state,
               double lr);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  /// Upper bound for original-domain training.
  std::size_t max_epochs = 100;
  /// Original training stops after this many epochs without a dev improvement.
  std::size_t early_stop_patience = 5;
  /// Expansion always runs exactly this many epochs.
  std::size_t fixed_epochs = 20;
  std::uint64_t seed = 0;

  static TrainConfig original_defaults() { return {}; }
  static TrainConfig expansion_defaults() {
    TrainConfig c;
    c.learning_rate = 0.0001;
    return c;
  }
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// (eval set name, error rate in [0,1]) in the order the sets were given.
  std::vector<std::pair<std::string, double>> eval_errors;

  double error(std::string_view name) const;
  bool operator==(const EpochLog &) const = default;
};

/// CSV with header `epoch,train_loss,eval_<name>_error...`, LF line endings.
void write_epoch_log_csv(std::ostream &os, std::span<const EpochLog> log);

struct NamedSet {
  std::string name;
  const Dataset *data = nullptr;
};

struct TrainResult {
  ParamVector params;
  std::vector<EpochLog> log;
};

/// Fraction of rows whose argmax of the T = 1 output differs from the label
/// (ties go to the lowest class index).
double evaluate(const ParamVector &params, const Dataset &data);

/// Trains from init() with minibatch Adam and early stopping on dev error.
/// Returns the parameters of the best-dev epoch; the log covers every epoch
/// that ran and tracks `dev` error.
TrainResult train_original(const NetConfig &net, const Dataset &train,
                           const Dataset &dev, const TrainConfig &config);

enum class Method { kFineTune, kWca, kEwc, kSkld, kSkldEwc };

std::string_view method_name(Method m);
/// Accepts fine-tune, wca, ewc, skld, skld-ewc (case-insensitive).
Method parse_method(std::string_view name);
bool method_needs_fisher(Method m);
bool method_needs_soft_targets(Method m);

struct ExpansionSpec {
  Method method = Method::kFineTune;
  RegWeights weights;
  const FisherDiagonal *fisher = nullptr;
  /// Must be aligned row-for-row with the new-domain training set.
  const SoftTargets *soft_targets = nullptr;

  /// Throws ConfigError if an artifact the method needs is missing or the
  /// soft targets were computed at a different temperature.
  void validate() const;
};

/// Objective for one minibatch under `spec`. `soft_rows` holds the soft
/// targets of the batch rows and may be empty for methods without SKLD.
Objective expansion_objective(const ExpansionSpec &spec, const ParamVector &theta_n,
                              const ParamVector &theta_o, const Batch &batch,
                              ConstMatrixView soft_rows);

/// Called after every Adam step with the 1-based global step index.
using StepObserver = std::function<void(std::size_t step, const ParamVector &)>;

/// Adapts a copy of `theta_o` to `new_train` for exactly
/// `config.fixed_epochs` epochs. The log has fixed_epochs + 1 rows; row 0
/// describes theta_o itself. Every row carries the error on each of
/// `eval_sets`. theta_o, the Fisher diagonal and the soft targets are never
/// modified.
TrainResult expand_domain(const ParamVector &theta_o, const Dataset &new_train,
                          const ExpansionSpec &spec, const TrainConfig &config,
                          std::span<const NamedSet> eval_sets,
                          const StepObserver &observer = {});

}  // namespace domexp

#endif  // DOMEXP_TRAINER_H_
