// domexp-cli.cc

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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "domexp/checkpoint.h"
#include "domexp/config.h"
#include "domexp/errors.h"
#include "domexp/experiment.h"

namespace {

using namespace domexp;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App *cmd, CommonOptions &opts) {
  cmd->add_option("-c,--config", opts.config_path,
                  "Experiment config file (defaults are used when omitted)");
  cmd->add_option("-s,--seed", opts.seed, "Override the config seed");
  cmd->add_option("-o,--out", opts.out, "Override the output directory");
}

ExpansionConfig resolve(const CommonOptions &opts) {
  ExpansionConfig c = opts.config_path.empty() ? default_config()
                                               : load_config(opts.config_path);
  if (opts.seed) c.seed = *opts.seed;
  if (opts.out) c.output_dir = *opts.out;
  c.validate();
  return c;
}

double pct(double e) { return 100.0 * e; }

int cmd_generate_data(const CommonOptions &opts) {
  ExpansionConfig c = resolve(opts);
  const ExperimentData d = build_datasets(c);
  const std::filesystem::path dir = run_directory(c) / "data";
  std::filesystem::create_directories(dir);
  save_feature_file(dir / "original_train.csv", d.original_train);
  save_feature_file(dir / "original_dev.csv", d.original_dev);
  save_feature_file(dir / "original_eval.csv", d.original_eval);
  save_feature_file(dir / "new_train.csv", d.new_train);
  save_feature_file(dir / "new_dev.csv", d.new_dev);
  save_feature_file(dir / "new_eval.csv", d.new_eval);
  std::cout << "wrote 6 feature files to " << dir.string() << "\n";
  return 0;
}

int cmd_train_original(const CommonOptions &opts) {
  ExpansionConfig c = resolve(opts);
  const PreparedRun run = prepare_run(c);
  std::printf("original model: %s\n", (run.run_dir / "original.ckpt").c_str());
  std::printf("  original eval error %.2f%%   new eval error %.2f%%\n",
              pct(evaluate(run.original, run.data.original_eval)),
              pct(evaluate(run.original, run.data.new_eval)));
  return 0;
}

int cmd_expand(const CommonOptions &opts, const std::string &method_text,
               const RegWeights &weights) {
  ExpansionConfig c = resolve(opts);
  const Method method = parse_method(method_text);
  PreparedRun run = prepare_run(c);
  ensure_artifacts(run, c, method, weights.temperature);
  GridPoint p{method, weights};
  p.weights.scale_distill_by_t_squared = c.distill_t_squared;
  const GridResult r = run_grid_point(run, c, p);

  const std::string stem = "expand-" + std::string(method_name(method));
  std::ofstream log(run.run_dir / (stem + "-log.csv"), std::ios::binary);
  write_epoch_log_csv(log, r.log);
  std::printf("%s after %zu epochs:\n", std::string(method_name(method)).c_str(),
              c.expansion_train.fixed_epochs);
  std::printf("  original eval error %.2f%%   new eval error %.2f%%   avg %.2f%%\n",
              pct(r.original_eval), pct(r.new_eval),
              pct(avg_error(r.original_eval, r.new_eval)));
  std::printf("  epoch log: %s\n", (run.run_dir / (stem + "-log.csv")).c_str());
  return 0;
}

int cmd_sweep(const CommonOptions &opts, const std::string &method_text,
              std::vector<double> grid) {
  ExpansionConfig c = resolve(opts);
  const Method method = parse_method(method_text);
  if (grid.empty()) {
    switch (method) {
      case Method::kWca: grid = c.grid.lambda_w; break;
      case Method::kEwc: grid = c.grid.lambda_e; break;
      default: grid = c.grid.lambda_s; break;
    }
  }
  const TradeoffCurve curve = sweep_lambda(c, method, grid);
  write_tradeoff_csv(std::cout, curve);
  return 0;
}

int cmd_forgetting(const CommonOptions &opts) {
  const std::vector<ForgettingRow> rows = forgetting_curve(resolve(opts));
  write_forgetting_csv(std::cout, rows);
  return 0;
}

int cmd_report(const CommonOptions &opts) {
  const ExperimentResult r = run_expansion_experiment(resolve(opts));
  write_report_csv(std::cout, r.rows);
  std::cerr << "report written to " << r.report_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"domexp: domain expansion experiments (fine-tune, WCA, EWC, SKLD, SKLD-EWC)"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, expand_opts, sweep_opts, forget_opts, report_opts;

  auto *gen = app.add_subcommand("generate-data", "Write the synthetic domains as feature CSVs");
  add_common(gen, gen_opts);

  auto *train = app.add_subcommand("train-original",
                                   "Train (or reload) the original-domain model");
  add_common(train, train_opts);

  std::string expand_method = "fine-tune";
  RegWeights weights;
  auto *expand = app.add_subcommand("expand", "Adapt the original model with one method");
  add_common(expand, expand_opts);
  expand->add_option("-m,--method", expand_method,
                     "fine-tune | wca | ewc | skld | skld-ewc")
      ->required();
  expand->add_option("--lambda-w", weights.lambda_w, "WCA weight")->check(CLI::NonNegativeNumber);
  expand->add_option("--lambda-e", weights.lambda_e, "EWC weight")->check(CLI::NonNegativeNumber);
  expand->add_option("--lambda-s", weights.lambda_s, "SKLD weight in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  expand->add_option("--temperature", weights.temperature, "Distillation temperature")
      ->check(CLI::PositiveNumber);

  std::string sweep_method = "skld";
  std::vector<double> sweep_grid;
  auto *sweep = app.add_subcommand("sweep", "Trade-off curve over one method's weight");
  add_common(sweep, sweep_opts);
  sweep->add_option("-m,--method", sweep_method, "wca | ewc | skld | skld-ewc")->required();
  sweep->add_option("--grid", sweep_grid, "Weights to try (default: the config grid)")
      ->delimiter(',');

  auto *forget = app.add_subcommand("forgetting-curve",
                                    "Per-epoch errors of fine-tuning vs SKLD");
  add_common(forget, forget_opts);

  auto *report = app.add_subcommand("report", "Full method comparison with baselines");
  add_common(report, report_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate_data(gen_opts);
    if (*train) return cmd_train_original(train_opts);
    if (*expand) return cmd_expand(expand_opts, expand_method, weights);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_method, sweep_grid);
    if (*forget) return cmd_forgetting(forget_opts);
    if (*report) return cmd_report(report_opts);
  } catch (const domexp::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
