// domexp/experiment.h

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

#ifndef DOMEXP_EXPERIMENT_H_
#define DOMEXP_EXPERIMENT_H_

// Experiment pipeline: original training, Fisher / soft-target preparation,
// per-method grid runs with dev-set model selection, the Original /
// Fine-Tuned / multi-condition baselines, lambda sweeps and forgetting curves.
// Everything is written under run_directory(config).

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "domexp/config.h"
#include "domexp/datagen.h"
#include "domexp/net.h"
#include "domexp/regularizers.h"
#include "domexp/trainer.h"

namespace domexp {

struct ExperimentData {
  Dataset original_train, original_dev, original_eval;
  Dataset new_train, new_dev, new_eval;
  NetConfig net;
};

/// Generates and splits the synthetic domains, or loads the six feature files.
ExperimentData build_datasets(const ExpansionConfig &config);

struct PreparedRun {
  ExperimentData data;
  ParamVector original;
  std::vector<EpochLog> original_log;
  FisherDiagonal fisher;
  /// Soft targets on the new-domain training rows, keyed by temperature.
  std::map<double, SoftTargets> soft_targets;
  std::filesystem::path run_dir;
};

/// Builds the data and trains the original model, or reloads its checkpoint
/// when the run directory already has one. Estimates the Fisher diagonal on
/// the original training set and the soft targets for every temperature
/// needed by the configured methods.
PreparedRun prepare_run(const ExpansionConfig &config);

/// Adds the Fisher diagonal and the soft targets at `temperature` to `run`
/// if `method` needs them and they are not there yet.
void ensure_artifacts(PreparedRun &run, const ExpansionConfig &config, Method method,
                      double temperature);

struct GridPoint {
  Method method = Method::kFineTune;
  RegWeights weights;
};

/// Grid points of `method` in deterministic order (lambda_s, then lambda_e,
/// then temperature for the hybrid). Fine-tuning has a single point.
std::vector<GridPoint> grid_points(const ExpansionConfig &config, Method method);

struct GridResult {
  GridPoint point;
  double original_dev = 0.0, new_dev = 0.0;
  double original_eval = 0.0, new_eval = 0.0;
  std::vector<EpochLog> log;
};

GridResult run_grid_point(const PreparedRun &run, const ExpansionConfig &config,
                          const GridPoint &point);

/// Index of the result with the lowest mean dev error; ties go to the
/// earliest. Eval errors play no part in the choice.
std::size_t select_best(std::span<const GridResult> results);

struct MethodReport {
  std::string method;
  RegWeights weights;
  double org_error = 0.0;
  double new_error = 0.0;
  double avg_error = 0.0;
  double rel_mc = 0.0;
};

/// Arithmetic mean of the two domain errors.
double avg_error(double org_error, double new_error);

/// 100 * (avg_method - avg_mc) / avg_mc. Throws InvalidArgument unless
/// avg_mc > 0.
double rel_mc(double avg_method, double avg_mc);

/// Fixed-point text with `decimals` digits, truncated toward zero. This is
/// how relative increases are printed in the report.
std::string format_truncated(double value, int decimals);

/// Trains from scratch on the pooled original + new training data with the
/// original-domain protocol, early-stopping on the pooled dev sets.
TrainResult multi_condition_baseline(const Dataset &original_train,
                                     const Dataset &new_train,
                                     const Dataset &original_dev,
                                     const Dataset &new_dev, const NetConfig &net,
                                     const TrainConfig &config);

struct ExperimentResult {
  std::vector<MethodReport> rows;
  std::vector<GridResult> grid;
  std::filesystem::path report_path;
};

/// Full comparison: Original, Fine-Tuned and MC rows followed by the tuned
/// row of each configured method. Writes grid.csv (flushed per grid point)
/// and report.csv into the run directory.
ExperimentResult run_expansion_experiment(const ExpansionConfig &config);

/// Header `method,lambda_w,lambda_e,lambda_s,temperature,org_error,new_error,
/// avg_error,rel_mc`; errors in percent with two decimals.
void write_report_csv(std::ostream &out, std::span<const MethodReport> rows);

struct TradeoffPoint {
  double lambda = 0.0;
  double org_error = 0.0;
  double new_error = 0.0;
};

struct TradeoffCurve {
  Method method = Method::kWca;
  std::vector<TradeoffPoint> points;  // sorted by lambda
};

/// One expansion per grid value of the method's controlling weight (lambda_w
/// for WCA, lambda_e for EWC, lambda_s for SKLD and the hybrid; the hybrid
/// keeps lambda_e at the first grid value). SKLD uses the first grid
/// temperature. Writes tradeoff-<method>.csv.
TradeoffCurve sweep_lambda(const ExpansionConfig &config, Method method,
                           std::span<const double> grid);
TradeoffCurve sweep_lambda(const PreparedRun &run, const ExpansionConfig &config,
                           Method method, std::span<const double> grid);
void write_tradeoff_csv(std::ostream &out, const TradeoffCurve &curve);

struct ForgettingRow {
  std::string method;
  std::size_t epoch = 0;
  double org_error = 0.0;
  double new_error = 0.0;
  double avg_error = 0.0;
};

/// Per-epoch eval errors of fine-tuning and SKLD, epochs 0..fixed_epochs.
/// SKLD uses [forgetting] lambda_s / temperature when set, otherwise the
/// dev-selected point of the SKLD grid. Writes forgetting.csv.
std::vector<ForgettingRow> forgetting_curve(const ExpansionConfig &config);
std::vector<ForgettingRow> forgetting_curve(const PreparedRun &run,
                                            const ExpansionConfig &config);
void write_forgetting_csv(std::ostream &out, std::span<const ForgettingRow> rows);

}  // namespace domexp

#endif  // DOMEXP_EXPERIMENT_H_
