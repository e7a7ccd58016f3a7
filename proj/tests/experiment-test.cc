// tests/experiment-test.cc

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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "domexp/config.h"
#include "domexp/errors.h"
#include "domexp/experiment.h"

namespace domexp {
namespace {

namespace fs = std::filesystem;

ExpansionConfig parse(const std::string &text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A scratch directory removed at scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name)
      : path(fs::temp_directory_path() / ("domexp-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Small enough to run the whole pipeline in a couple of seconds.
ExpansionConfig tiny_config(const fs::path &out) {
  ExpansionConfig c = parse(R"(
methods = fine-tune, wca, ewc, skld, skld-ewc
[domain.original]
samples_per_class = 18
feature_dim = 6
num_classes = 3
[domain.new]
samples_per_class = 18
feature_dim = 6
num_classes = 3
[net]
hidden_dims = 8
[train.original]
max_epochs = 8
[train.expansion]
fixed_epochs = 3
[grid]
lambda_w = 0.1, 10
lambda_e = 0.1, 10
lambda_s = 0, 0.5
temperature = 2
)");
  c.output_dir = out;
  return c;
}

// ---- config -------------------------------------------------------------------

TEST(Config, DefaultsDescribeTheDeskScaleTask) {
  const ExpansionConfig c = default_config();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.original_domain.num_classes, 8u);
  EXPECT_EQ(c.original_domain.feature_dim, 20u);
  EXPECT_EQ(c.hidden_dims, (std::vector<std::size_t>{64, 64}));
  EXPECT_EQ(c.methods.size(), 5u);
  EXPECT_EQ(c.expansion_train.learning_rate, 0.0001);
  EXPECT_EQ(c.original_train.learning_rate, 0.001);
  EXPECT_EQ(c.expansion_train.fixed_epochs, 20u);
  EXPECT_EQ(c.fisher_offset, 1.0);
  EXPECT_EQ(c.grid.lambda_s.size(), 10u);
  EXPECT_EQ(c.grid.lambda_w.front(), 1e-3);
  EXPECT_EQ(c.grid.lambda_w.back(), 1e2);
  const ExperimentData d = build_datasets(c);
  EXPECT_EQ(d.original_train.size(), 400u);
  EXPECT_EQ(d.original_dev.size(), 100u);
  EXPECT_EQ(d.new_eval.size(), 100u);
}

TEST(Config, ShippedDefaultFileMatchesBuiltInDefaults) {
  const ExpansionConfig c = load_config(fs::path(DOMEXP_SOURCE_DIR) / "configs/default.ini");
  EXPECT_EQ(canonical_config(c), canonical_config(default_config()));
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, ParsesEverySection) {
  const ExpansionConfig c = parse(R"(
seed = 17
output_dir = /tmp/x
methods = skld, ewc
[data]
split = 0.5, 0.25, 0.25
[domain.new]
domain_shift = 2.5
noise_std = 0.5
[net]
hidden_dims = 32, 16, 8
[train.original]
learning_rate = 0.01
early_stop_patience = 2
[train.expansion]
batch_size = 4
fixed_epochs = 7
[grid]
lambda_s = 0.1, 0.2
temperature = 1, 3
lambda_e = 5
[regularizers]
fisher_offset = 0
distill_t_squared = true
[forgetting]
lambda_s = 0.3
temperature = 3
)");
  EXPECT_EQ(c.seed, 17u);
  EXPECT_EQ(c.output_dir, fs::path("/tmp/x"));
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::kSkld, Method::kEwc}));
  EXPECT_EQ(c.split.train, 0.5);
  EXPECT_EQ(c.new_domain.domain_shift, 2.5);
  EXPECT_EQ(c.new_domain.noise_std, 0.5);
  EXPECT_EQ(c.hidden_dims, (std::vector<std::size_t>{32, 16, 8}));
  EXPECT_EQ(c.original_train.learning_rate, 0.01);
  EXPECT_EQ(c.original_train.early_stop_patience, 2u);
  EXPECT_EQ(c.expansion_train.batch_size, 4u);
  EXPECT_EQ(c.expansion_train.fixed_epochs, 7u);
  EXPECT_EQ(c.grid.temperature, (std::vector<double>{1, 3}));
  EXPECT_EQ(c.grid.lambda_e, (std::vector<double>{5}));
  EXPECT_EQ(c.fisher_offset, 0.0);
  EXPECT_TRUE(c.distill_t_squared);
  EXPECT_EQ(c.forgetting_lambda_s, 0.3);
  EXPECT_EQ(c.forgetting_temperature, 3.0);
}

TEST(Config, UnknownKeysAndSectionsAreErrors) {
  EXPECT_THROW(parse("colour = blue\n"), ConfigError);
  EXPECT_THROW(parse("[net]\nhidden = 3\n"), ConfigError);
  EXPECT_THROW(parse("[nets]\nhidden_dims = 3\n"), ConfigError);
  EXPECT_THROW(parse("[train.original]\nfixed_epochs = 3\n"), ConfigError);
}

TEST(Config, BadValuesAreErrors) {
  EXPECT_THROW(parse("seed = -1\n"), ConfigError);
  EXPECT_THROW(parse("[grid]\nlambda_s = 1.5\n"), ConfigError);
  EXPECT_THROW(parse("[grid]\ntemperature = 0\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nsplit = 0.5, 0.5\n"), ConfigError);
  EXPECT_THROW(parse("[data]\nsource = tape\n"), ConfigError);
  EXPECT_THROW(parse("methods = \n"), ConfigError);
  EXPECT_THROW(parse("methods = lwf\n"), ConfigError);
  EXPECT_THROW(parse("[train.expansion]\nlearning_rate = abc\n"), ConfigError);
  EXPECT_THROW(parse("[domain.new]\nfeature_dim = 5\n"), ConfigError);
}

TEST(Config, CanonicalTextIgnoresSeedAndOutputDir) {
  ExpansionConfig a = default_config(), b = default_config();
  b.seed = 99;
  b.output_dir = "elsewhere";
  EXPECT_EQ(canonical_config(a), canonical_config(b));
  b.grid.lambda_s.push_back(0.95);
  EXPECT_NE(canonical_config(a), canonical_config(b));
}

TEST(Config, RunDirectoryNamesHashAndSeed) {
  ExpansionConfig c = default_config();
  c.seed = 4;
  c.output_dir = "out";
  const std::string name = run_directory(c).filename().string();
  EXPECT_EQ(name.rfind("run-", 0), 0u);
  EXPECT_EQ(name.size(), 4u + 16u + 3u);
  EXPECT_EQ(name.substr(20), "-s4");
  EXPECT_EQ(run_directory(c).parent_path(), fs::path("out"));
}

// ---- report arithmetic ----------------------------------------------------------

TEST(Report, RelativeIncreaseAndAverageArithmetic) {
  EXPECT_EQ(format_truncated(rel_mc(10.03, 9.52), 2), "5.35");
  EXPECT_EQ(format_truncated(rel_mc(15.57, 9.52), 1), "63.5");
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", avg_error(8.10, 23.04));
  EXPECT_STREQ(buf, "15.57");
  EXPECT_EQ(format_truncated(rel_mc(9.52, 9.52), 2), "0.00");
  EXPECT_EQ(rel_mc(9.52, 9.52), 0.0);
}

TEST(Report, RelMcNeedsPositiveBaseline) {
  EXPECT_THROW(rel_mc(1.0, 0.0), InvalidArgument);
  EXPECT_THROW(rel_mc(1.0, -2.0), InvalidArgument);
}

TEST(Report, TruncationFormatting) {
  EXPECT_EQ(format_truncated(1.239, 2), "1.23");
  EXPECT_EQ(format_truncated(-1.239, 2), "-1.23");
  EXPECT_EQ(format_truncated(-0.001, 2), "0.00");
  EXPECT_EQ(format_truncated(2.0, 0), "2");
  EXPECT_EQ(format_truncated(std::nan(""), 2), "nan");
}

TEST(Report, CsvLayout) {
  MethodReport r;
  r.method = "SKLD";
  r.weights.lambda_s = 0.3;
  r.weights.temperature = 2;
  r.org_error = 0.081;
  r.new_error = 0.2304;
  r.avg_error = avg_error(r.org_error, r.new_error);
  r.rel_mc = rel_mc(10.03, 9.52);
  std::ostringstream os;
  write_report_csv(os, std::vector<MethodReport>{r});
  EXPECT_EQ(os.str(),
            "method,lambda_w,lambda_e,lambda_s,temperature,org_error,new_error,avg_error,"
            "rel_mc\n"
            "SKLD,0,0,0.3,2,8.10,23.04,15.57,5.35\n");
}

TEST(SelectBest, UsesDevErrorsOnlyAndKeepsFirstOnTies) {
  std::vector<GridResult> g(3);
  g[0].original_dev = 0.2, g[0].new_dev = 0.2, g[0].original_eval = 0.0, g[0].new_eval = 0.0;
  g[1].original_dev = 0.1, g[1].new_dev = 0.2, g[1].original_eval = 0.9, g[1].new_eval = 0.9;
  g[2].original_dev = 0.2, g[2].new_dev = 0.1, g[2].original_eval = 0.5, g[2].new_eval = 0.5;
  EXPECT_EQ(select_best(g), 1u);
  EXPECT_THROW(select_best(std::vector<GridResult>{}), InvalidArgument);
}

TEST(GridPoints, CoverTheConfiguredGrids) {
  const ExpansionConfig c = default_config();
  EXPECT_EQ(grid_points(c, Method::kFineTune).size(), 1u);
  EXPECT_EQ(grid_points(c, Method::kWca).size(), 6u);
  EXPECT_EQ(grid_points(c, Method::kEwc).size(), 6u);
  EXPECT_EQ(grid_points(c, Method::kSkld).size(), 20u);
  EXPECT_EQ(grid_points(c, Method::kSkldEwc).size(), 120u);
  for (const GridPoint &p : grid_points(c, Method::kSkldEwc)) {
    EXPECT_EQ(p.weights.lambda_w, 0.0);
    EXPECT_GT(p.weights.lambda_e, 0.0);
  }
}

// ---- pipeline ---------------------------------------------------------------------

TEST(Experiment, BaselineOnlyRun) {
  TempDir dir("baseline");
  ExpansionConfig c = tiny_config(dir.path);
  c.methods = {Method::kFineTune};
  const ExperimentResult r = run_expansion_experiment(c);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].method, "Original");
  EXPECT_EQ(r.rows[1].method, "Fine-Tuned");
  EXPECT_EQ(r.rows[2].method, "MC");
  EXPECT_TRUE(fs::exists(r.report_path));
  EXPECT_TRUE(fs::exists(run_directory(c) / "original.ckpt"));
  EXPECT_TRUE(fs::exists(run_directory(c) / "mc.ckpt"));
  EXPECT_FALSE(fs::exists(run_directory(c) / "fisher.bin"));
}

TEST(Experiment, FullRunInvariants) {
  TempDir dir("full");
  const ExpansionConfig c = tiny_config(dir.path);
  const ExperimentResult r = run_expansion_experiment(c);
  ASSERT_EQ(r.rows.size(), 7u);
  const char *names[] = {"Original", "Fine-Tuned", "MC", "WCA", "EWC", "SKLD", "SKLD-EWC"};
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(r.rows[i].method, names[i]);
  for (const MethodReport &row : r.rows) {
    EXPECT_NEAR(row.avg_error, (row.org_error + row.new_error) / 2.0, 1e-12);
    EXPECT_GE(row.org_error, 0.0);
    EXPECT_LE(row.new_error, 1.0);
  }
  if (r.rows[2].avg_error > 0.0) EXPECT_EQ(r.rows[2].rel_mc, 0.0);
  EXPECT_EQ(r.grid.size(), 1u + 2 + 2 + 2 + 4);

  // The reported eval errors belong to the dev-selected grid point.
  std::size_t first = 1;
  for (std::size_t m = 3; m < 7; ++m) {
    const std::size_t count = m == 6 ? 4 : 2;
    const std::span<const GridResult> mine(r.grid.data() + first, count);
    const GridResult &best = mine[select_best(mine)];
    EXPECT_EQ(r.rows[m].org_error, best.original_eval) << names[m];
    EXPECT_EQ(r.rows[m].new_error, best.new_eval) << names[m];
    first += count;
  }

  const std::string report = slurp(r.report_path);
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 8);
  const std::string grid = slurp(run_directory(c) / "grid.csv");
  EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 12);
  for (const char *f : {"config.canonical", "original-log.csv", "fisher.bin", "soft-T2.bin"})
    EXPECT_TRUE(fs::exists(run_directory(c) / f)) << f;
}

TEST(Experiment, ResumedRunReusesArtifactsAndMatches) {
  TempDir dir("resume");
  const ExpansionConfig c = tiny_config(dir.path);
  const ExperimentResult a = run_expansion_experiment(c);
  const std::string first = slurp(a.report_path);
  const auto stamp = fs::last_write_time(run_directory(c) / "original.ckpt");
  const ExperimentResult b = run_expansion_experiment(c);
  EXPECT_EQ(slurp(b.report_path), first);
  EXPECT_EQ(fs::last_write_time(run_directory(c) / "original.ckpt"), stamp);
}

TEST(Experiment, FreshRunsAreByteIdentical) {
  TempDir d1("det1"), d2("det2");
  const ExperimentResult a = run_expansion_experiment(tiny_config(d1.path));
  const ExperimentResult b = run_expansion_experiment(tiny_config(d2.path));
  EXPECT_EQ(slurp(a.report_path), slurp(b.report_path));
}

TEST(Experiment, SeedChangesTheRun) {
  TempDir dir("seed");
  ExpansionConfig a = tiny_config(dir.path), b = tiny_config(dir.path);
  b.seed = 2;
  EXPECT_NE(run_directory(a), run_directory(b));
  EXPECT_NE(build_datasets(a).original_train, build_datasets(b).original_train);
}

TEST(SweepLambda, ZeroWcaWeightIsFineTuning) {
  TempDir dir("sweep");
  const ExpansionConfig c = tiny_config(dir.path);
  const std::vector<double> zero{0.0};
  const TradeoffCurve curve = sweep_lambda(c, Method::kWca, zero);
  ASSERT_EQ(curve.points.size(), 1u);
  const PreparedRun run = prepare_run(c);
  const GridResult ft = run_grid_point(run, c, GridPoint{});
  EXPECT_EQ(curve.points[0].org_error, ft.original_eval);
  EXPECT_EQ(curve.points[0].new_error, ft.new_eval);
  EXPECT_TRUE(fs::exists(run_directory(c) / "tradeoff-wca.csv"));
}

TEST(SweepLambda, SortsTheGridAndRejectsFineTuning) {
  TempDir dir("sweep2");
  const ExpansionConfig c = tiny_config(dir.path);
  const std::vector<double> grid{0.5, 0.0, 0.25};
  const TradeoffCurve curve = sweep_lambda(c, Method::kSkld, grid);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_EQ(curve.points[0].lambda, 0.0);
  EXPECT_EQ(curve.points[2].lambda, 0.5);
  EXPECT_THROW(sweep_lambda(c, Method::kFineTune, grid), ConfigError);
}

TEST(ForgettingCurve, RowsPerMethodAndSharedStart) {
  TempDir dir("forget");
  ExpansionConfig c = tiny_config(dir.path);
  c.forgetting_lambda_s = 0.5;
  c.forgetting_temperature = 2.0;
  const std::vector<ForgettingRow> rows = forgetting_curve(c);
  const std::size_t per = c.expansion_train.fixed_epochs + 1;
  ASSERT_EQ(rows.size(), 2 * per);
  EXPECT_EQ(rows[0].method, "FT");
  EXPECT_EQ(rows[per].method, "SKLD");
  EXPECT_EQ(rows[0].org_error, rows[per].org_error);
  EXPECT_EQ(rows[0].new_error, rows[per].new_error);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].epoch, i % per);
    EXPECT_NEAR(rows[i].avg_error, (rows[i].org_error + rows[i].new_error) / 2, 1e-12);
  }
  EXPECT_TRUE(fs::exists(run_directory(c) / "forgetting.csv"));
}

TEST(MultiCondition, PoolingASetWithItselfMatchesTrainingOnIt) {
  const ExpansionConfig c = tiny_config("unused");
  double pooled = 0.0, single = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ExpansionConfig s = c;
    s.seed = seed;
    const ExperimentData d = build_datasets(s);
    TrainConfig t = s.original_train;
    t.seed = seed;
    pooled += evaluate(multi_condition_baseline(d.original_train, d.original_train,
                                                d.original_dev, d.original_dev, d.net, t)
                           .params,
                       d.original_dev);
    single += evaluate(train_original(d.net, d.original_train, d.original_dev, t).params,
                       d.original_dev);
  }
  EXPECT_NEAR(pooled / 3.0, single / 3.0, 0.15);
}

TEST(FileSource, LoadsSixFeatureFiles) {
  TempDir dir("files");
  const ExpansionConfig synth = tiny_config(dir.path);
  const ExperimentData d = build_datasets(synth);
  const std::pair<const char *, const Dataset *> parts[] = {
      {"original_train", &d.original_train}, {"original_dev", &d.original_dev},
      {"original_eval", &d.original_eval},   {"new_train", &d.new_train},
      {"new_dev", &d.new_dev},               {"new_eval", &d.new_eval}};
  std::ostringstream ini;
  ini << "[data]\nsource = files\n[files]\nnum_classes = 3\n";
  for (const auto &[name, data] : parts) {
    save_feature_file(dir.path / (std::string(name) + ".csv"), *data);
    ini << name << " = " << (dir.path / (std::string(name) + ".csv")).string() << "\n";
  }
  const ExperimentData loaded = build_datasets(parse(ini.str()));
  EXPECT_EQ(loaded.original_train.features, d.original_train.features);
  EXPECT_EQ(loaded.new_eval.labels, d.new_eval.labels);
  EXPECT_EQ(loaded.net.input_dim, 6u);
  EXPECT_EQ(loaded.net.num_classes, 3u);
}

}  // namespace
}  // namespace domexp
