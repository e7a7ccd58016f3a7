// domexp/regularizers.h

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

#ifndef DOMEXP_REGULARIZERS_H_
#define DOMEXP_REGULARIZERS_H_

// Domain-expansion objectives. Each returns the loss and its exact gradient
// with respect to the new parameters theta_n:
//
//   fine-tune  J = CE
//   WCA        J = CE + lambda_w/2 * sum_i (tn_i - to_i)^2
//   EWC        J = CE + lambda_e/2 * sum_i (F_i + offset) (tn_i - to_i)^2
//   SKLD       J = (1 - lambda_s) CE + lambda_s * CE(soft_T, softmax(z / T))
//   SKLD-EWC   J = SKLD + EWC penalty (the penalty is not scaled by 1-lambda_s)
//
// CE against hard labels always uses T = 1. Data terms are batch means;
// penalties are added once per batch.

#include <cstddef>
#include <span>
#include <vector>

#include "domexp/dataset.h"
#include "domexp/net.h"
#include "domexp/numkit.h"

namespace domexp {

struct Objective {
  double loss = 0.0;
  ParamVector gradient;
};

/// Per-parameter importance aligned to the ParamVector flat layout. `values`
/// are raw gradient variances; `offset` is added when the penalty is
/// evaluated, so the raw estimate stays inspectable.
struct FisherDiagonal {
  std::vector<double> values;
  double offset = 1.0;

  std::size_t size() const { return values.size(); }
  double importance(std::size_t i) const { return values[i] + offset; }
  bool operator==(const FisherDiagonal &) const = default;
};

/// Output distributions of the frozen original model on the new-domain
/// training rows, one row per sample, at temperature `temperature`.
struct SoftTargets {
  Matrix probs;
  double temperature = 1.0;
  bool operator==(const SoftTargets &) const = default;
};

struct RegWeights {
  double lambda_w = 0.0;
  double lambda_e = 0.0;
  double lambda_s = 0.0;
  double temperature = 1.0;
  /// Multiply the distillation term by T^2. Off by default.
  bool scale_distill_by_t_squared = false;

  /// Throws InvalidArgument for negative lambdas, lambda_s outside [0, 1]
  /// or a non-positive temperature.
  void validate() const;
};

/// How the distillation term compares soft targets with the model output.
/// Both forms have identical gradients; they differ by the soft-target
/// entropy, which does not depend on theta_n.
enum class DistillForm { kCrossEntropy, kKlDivergence };

Objective wca_penalty(const ParamVector &theta_n, const ParamVector &theta_o,
                      double lambda_w);

Objective ewc_penalty(const ParamVector &theta_n, const ParamVector &theta_o,
                      const FisherDiagonal &fisher, double lambda_e);

/// Empirical Fisher diagonal: the population variance over samples of the
/// per-sample cross-entropy gradient (ground-truth labels), per coordinate.
/// Uses two passes (mean, then squared deviations) reducing in sample-index
/// order, so the result is bit-reproducible.
FisherDiagonal estimate_fisher_diagonal(const ParamVector &params,
                                        const Dataset &data, double offset = 1.0);

/// Row i = softmax_t(logits of x_i, T). Computed once from the frozen model.
SoftTargets precompute_soft_targets(const ParamVector &original,
                                    ConstMatrixView features, double temperature);

/// Batch-mean cross-entropy against hard labels (plain fine-tuning loss).
Objective cross_entropy_loss(const ParamVector &params, const Batch &batch);

/// Batch-summed distillation term and its gradient w.r.t. the logits:
/// sum_i CE(soft_i, softmax(z_i / T)) (or KL in place of CE). The logit
/// gradient of each row is (softmax(z_i / T) - soft_i) / T for either form.
struct DistillTerm {
  double value = 0.0;
  Matrix dlogits;
};
DistillTerm distillation_term(ConstMatrixView logits, ConstMatrixView soft,
                              double temperature,
                              DistillForm form = DistillForm::kCrossEntropy);

/// `soft_rows` must be aligned with the batch rows. With lambda_s == 0 the
/// distillation term is skipped entirely, so the result equals
/// cross_entropy_loss bit for bit.
Objective skld_loss(const ParamVector &theta_n, const Batch &batch,
                    ConstMatrixView soft_rows, double lambda_s, double temperature,
                    DistillForm form = DistillForm::kCrossEntropy,
                    bool scale_by_t_squared = false);

/// skld_loss + ewc_penalty. A zero lambda drops the matching term.
Objective hybrid_loss(const ParamVector &theta_n, const ParamVector &theta_o,
                      const Batch &batch, ConstMatrixView soft_rows,
                      const FisherDiagonal &fisher, const RegWeights &reg);

}  // namespace domexp

#endif  // DOMEXP_REGULARIZERS_H_
