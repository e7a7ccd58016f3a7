// experiment.cc

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

#include "domexp/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "domexp/checkpoint.h"
#include "domexp/errors.h"

namespace domexp {

namespace fs = std::filesystem;

ExperimentData build_datasets(const ExpansionConfig &config) {
  config.validate();
  ExperimentData d;
  if (config.source == ExpansionConfig::Source::kSynthetic) {
    DomainSpec org = config.original_domain;
    DomainSpec neu = config.new_domain;
    org.seed = config.seed;
    neu.seed = config.seed;
    DatasetSplit a = split(generate_domain(org), config.split,
                           config.seed ^ fnv1a64(org.name));
    DatasetSplit b = split(generate_domain(neu), config.split,
                           config.seed ^ fnv1a64(neu.name));
    d.original_train = std::move(a.train);
    d.original_dev = std::move(a.dev);
    d.original_eval = std::move(a.eval);
    d.new_train = std::move(b.train);
    d.new_dev = std::move(b.dev);
    d.new_eval = std::move(b.eval);
  } else {
    FeatureFileOptions opts;
    opts.num_classes = config.files.num_classes;
    opts.stack_context = config.files.stack_context;
    auto load = [&](const fs::path &p, const char *tag) {
      FeatureFileOptions o = opts;
      o.domain_tag = tag;
      return load_feature_file(p, o);
    };
    d.original_train = load(config.files.original_train, "original");
    d.original_dev = load(config.files.original_dev, "original");
    d.original_eval = load(config.files.original_eval, "original");
    d.new_train = load(config.files.new_train, "new");
    d.new_dev = load(config.files.new_dev, "new");
    d.new_eval = load(config.files.new_eval, "new");
    if (!opts.num_classes) {
      std::size_t classes = 0;
      for (const Dataset *s : {&d.original_train, &d.original_dev, &d.original_eval,
                               &d.new_train, &d.new_dev, &d.new_eval})
        classes = std::max(classes, s->num_classes);
      for (Dataset *s : {&d.original_train, &d.original_dev, &d.original_eval,
                         &d.new_train, &d.new_dev, &d.new_eval})
        s->num_classes = classes;
    }
    const std::size_t dim = d.original_train.feature_dim();
    for (const Dataset *s : {&d.original_dev, &d.original_eval, &d.new_train,
                             &d.new_dev, &d.new_eval})
      if (s->feature_dim() != dim)
        throw ConfigError("feature files disagree on the feature dimension");
  }
  d.net.input_dim = d.original_train.feature_dim();
  d.net.hidden_dims = config.hidden_dims;
  d.net.num_classes = d.original_train.num_classes;
  return d;
}

namespace {

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

template <typename Fn>
void write_file(const fs::path &path, Fn &&fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  fn(out);
  if (!out) throw Error("failed writing " + path.string());
}

std::string soft_target_file(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "soft-T%.17g.bin", t);
  return buf;
}

std::set<double> needed_temperatures(const ExpansionConfig &config) {
  std::set<double> temps;
  for (Method m : config.methods)
    if (method_needs_soft_targets(m))
      temps.insert(config.grid.temperature.begin(), config.grid.temperature.end());
  if (config.forgetting_temperature) temps.insert(*config.forgetting_temperature);
  return temps;
}

TrainConfig seeded(TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

std::string percent(double error) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * error);
  return buf;
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string display_name(Method m) {
  switch (m) {
    case Method::kFineTune: return "Fine-Tuned";
    case Method::kWca: return "WCA";
    case Method::kEwc: return "EWC";
    case Method::kSkld: return "SKLD";
    case Method::kSkldEwc: return "SKLD-EWC";
  }
  return "?";
}

}  // namespace

PreparedRun prepare_run(const ExpansionConfig &config) {
  PreparedRun run;
  run.data = build_datasets(config);
  run.run_dir = run_directory(config);
  fs::create_directories(run.run_dir);
  write_text(run.run_dir / "config.canonical", canonical_config(config));

  const fs::path model_path = run.run_dir / "original.ckpt";
  if (fs::exists(model_path)) {
    ModelCheckpoint ck = load_model(model_path);
    if (ck.params.config() != run.data.net || ck.seed != config.seed)
      throw ConfigError(model_path.string() + " does not match this configuration");
    run.original = std::move(ck.params);
  } else {
    TrainResult r = train_original(run.data.net, run.data.original_train,
                                   run.data.original_dev,
                                   seeded(config.original_train, config.seed));
    run.original = std::move(r.params);
    run.original_log = std::move(r.log);
    write_file(run.run_dir / "original-log.csv",
               [&](std::ostream &o) { write_epoch_log_csv(o, run.original_log); });
    save_model(model_path, run.original, config.seed);
  }

  for (Method m : config.methods) {
    if (method_needs_fisher(m)) ensure_artifacts(run, config, m, 1.0);
  }
  for (double t : needed_temperatures(config))
    ensure_artifacts(run, config, Method::kSkld, t);
  return run;
}

void ensure_artifacts(PreparedRun &run, const ExpansionConfig &config, Method method,
                      double temperature) {
  if (method_needs_fisher(method) && run.fisher.size() != run.original.size()) {
    const fs::path fisher_path = run.run_dir / "fisher.bin";
    if (fs::exists(fisher_path)) {
      run.fisher = load_fisher(fisher_path);
      run.fisher.offset = config.fisher_offset;
    } else {
      run.fisher = estimate_fisher_diagonal(run.original, run.data.original_train,
                                            config.fisher_offset);
      save_fisher(fisher_path, run.fisher);
    }
  }
  if (method_needs_soft_targets(method) && !run.soft_targets.contains(temperature)) {
    SoftTargets st =
        precompute_soft_targets(run.original, run.data.new_train.features, temperature);
    save_soft_targets(run.run_dir / soft_target_file(temperature), st);
    run.soft_targets.emplace(temperature, std::move(st));
  }
}

std::vector<GridPoint> grid_points(const ExpansionConfig &config, Method method) {
  std::vector<GridPoint> points;
  auto base = [&] {
    GridPoint p;
    p.method = method;
    p.weights.scale_distill_by_t_squared = config.distill_t_squared;
    return p;
  };
  switch (method) {
    case Method::kFineTune:
      points.push_back(base());
      break;
    case Method::kWca:
      for (double lw : config.grid.lambda_w) {
        GridPoint p = base();
        p.weights.lambda_w = lw;
        points.push_back(p);
      }
      break;
    case Method::kEwc:
      for (double le : config.grid.lambda_e) {
        GridPoint p = base();
        p.weights.lambda_e = le;
        points.push_back(p);
      }
      break;
    case Method::kSkld:
      for (double ls : config.grid.lambda_s)
        for (double t : config.grid.temperature) {
          GridPoint p = base();
          p.weights.lambda_s = ls;
          p.weights.temperature = t;
          points.push_back(p);
        }
      break;
    case Method::kSkldEwc:
      for (double ls : config.grid.lambda_s)
        for (double le : config.grid.lambda_e)
          for (double t : config.grid.temperature) {
            GridPoint p = base();
            p.weights.lambda_s = ls;
            p.weights.lambda_e = le;
            p.weights.temperature = t;
            points.push_back(p);
          }
      break;
  }
  return points;
}

GridResult run_grid_point(const PreparedRun &run, const ExpansionConfig &config,
                          const GridPoint &point) {
  ExpansionSpec spec;
  spec.method = point.method;
  spec.weights = point.weights;
  if (method_needs_fisher(point.method)) spec.fisher = &run.fisher;
  if (method_needs_soft_targets(point.method)) {
    auto it = run.soft_targets.find(point.weights.temperature);
    if (it == run.soft_targets.end())
      throw ConfigError("no soft targets prepared for this temperature");
    spec.soft_targets = &it->second;
  }
  const ExperimentData &d = run.data;
  const NamedSet sets[] = {{"original_dev", &d.original_dev},
                           {"new_dev", &d.new_dev},
                           {"original_eval", &d.original_eval},
                           {"new_eval", &d.new_eval}};
  TrainResult r = expand_domain(run.original, d.new_train, spec,
                                seeded(config.expansion_train, config.seed), sets);
  GridResult out;
  out.point = point;
  const EpochLog &last = r.log.back();
  out.original_dev = last.error("original_dev");
  out.new_dev = last.error("new_dev");
  out.original_eval = last.error("original_eval");
  out.new_eval = last.error("new_eval");
  out.log = std::move(r.log);
  return out;
}

std::size_t select_best(std::span<const GridResult> results) {
  if (results.empty()) throw InvalidArgument("select_best: no grid results");
  std::size_t best = 0;
  double best_avg = avg_error(results[0].original_dev, results[0].new_dev);
  for (std::size_t i = 1; i < results.size(); ++i) {
    const double a = avg_error(results[i].original_dev, results[i].new_dev);
    if (a < best_avg) {
      best_avg = a;
      best = i;
    }
  }
  return best;
}

double avg_error(double org_error, double new_error) {
  return (org_error + new_error) / 2.0;
}

double rel_mc(double avg_method, double avg_mc) {
  if (!(avg_mc > 0.0))
    throw InvalidArgument("rel_mc: multi-condition average must be > 0");
  return 100.0 * (avg_method - avg_mc) / avg_mc;
}

std::string format_truncated(double value, int decimals) {
  if (!std::isfinite(value)) return "nan";
  const double scale = std::pow(10.0, decimals);
  // The small nudge absorbs representation error such as 5.35 being stored
  // as 5.34999999999999964 before truncation.
  const double scaled = value * scale;
  const double nudge = 1e-9 * std::max(1.0, std::abs(scaled));
  double t = std::trunc(scaled + (scaled >= 0 ? nudge : -nudge));
  if (t == 0.0) t = 0.0;  // no "-0.00"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, t / scale);
  return buf;
}

TrainResult multi_condition_baseline(const Dataset &original_train,
                                     const Dataset &new_train,
                                     const Dataset &original_dev,
                                     const Dataset &new_dev, const NetConfig &net,
                                     const TrainConfig &config) {
  const Dataset train_parts[] = {original_train, new_train};
  const Dataset dev_parts[] = {original_dev, new_dev};
  return train_original(net, pool(train_parts), pool(dev_parts), config);
}

void write_report_csv(std::ostream &out, std::span<const MethodReport> rows) {
  out << "method,lambda_w,lambda_e,lambda_s,temperature,org_error,new_error,"
         "avg_error,rel_mc\n";
  for (const MethodReport &r : rows) {
    out << r.method << ',' << number(r.weights.lambda_w) << ','
        << number(r.weights.lambda_e) << ',' << number(r.weights.lambda_s) << ','
        << number(r.weights.temperature) << ',' << percent(r.org_error) << ','
        << percent(r.new_error) << ',' << percent(r.avg_error) << ','
        << format_truncated(r.rel_mc, 2) << '\n';
  }
}

namespace {

void write_grid_header(std::ostream &out) {
  out << "method,lambda_w,lambda_e,lambda_s,temperature,org_dev_error,"
         "new_dev_error,org_eval_error,new_eval_error\n";
}

void write_grid_row(std::ostream &out, const GridResult &g) {
  out << method_name(g.point.method) << ',' << number(g.point.weights.lambda_w) << ','
      << number(g.point.weights.lambda_e) << ',' << number(g.point.weights.lambda_s)
      << ',' << number(g.point.weights.temperature) << ',' << percent(g.original_dev)
      << ',' << percent(g.new_dev) << ',' << percent(g.original_eval) << ','
      << percent(g.new_eval) << '\n';
}

MethodReport make_row(std::string name, const RegWeights &w, double org, double neu) {
  MethodReport r;
  r.method = std::move(name);
  r.weights = w;
  r.org_error = org;
  r.new_error = neu;
  r.avg_error = avg_error(org, neu);
  return r;
}

}  // namespace

ExperimentResult run_expansion_experiment(const ExpansionConfig &config) {
  const PreparedRun run = prepare_run(config);
  const ExperimentData &d = run.data;
  ExperimentResult result;

  std::ofstream grid_csv(run.run_dir / "grid.csv", std::ios::binary | std::ios::trunc);
  if (!grid_csv) throw Error("cannot write grid.csv in " + run.run_dir.string());
  write_grid_header(grid_csv);

  std::vector<Method> order = {Method::kFineTune};
  for (Method m : config.methods)
    if (m != Method::kFineTune) order.push_back(m);

  std::vector<MethodReport> method_rows;
  for (Method m : order) {
    const std::size_t first = result.grid.size();
    for (const GridPoint &p : grid_points(config, m)) {
      result.grid.push_back(run_grid_point(run, config, p));
      write_grid_row(grid_csv, result.grid.back());
      grid_csv.flush();
    }
    const std::span<const GridResult> mine(result.grid.data() + first,
                                           result.grid.size() - first);
    const GridResult &best = mine[select_best(mine)];
    method_rows.push_back(make_row(display_name(m), best.point.weights,
                                   best.original_eval, best.new_eval));
  }

  const fs::path mc_path = run.run_dir / "mc.ckpt";
  ParamVector mc;
  if (fs::exists(mc_path)) {
    mc = load_model(mc_path).params;
    if (mc.config() != d.net) throw ConfigError(mc_path.string() + " has the wrong shape");
  } else {
    mc = multi_condition_baseline(d.original_train, d.new_train, d.original_dev,
                                  d.new_dev, d.net,
                                  seeded(config.original_train, config.seed))
             .params;
    save_model(mc_path, mc, config.seed);
  }

  result.rows.push_back(make_row("Original", RegWeights{}, evaluate(run.original, d.original_eval),
                                 evaluate(run.original, d.new_eval)));
  result.rows.push_back(method_rows.front());
  result.rows.push_back(
      make_row("MC", RegWeights{}, evaluate(mc, d.original_eval), evaluate(mc, d.new_eval)));
  result.rows.insert(result.rows.end(), method_rows.begin() + 1, method_rows.end());

  const double mc_avg = result.rows[2].avg_error;
  for (MethodReport &r : result.rows)
    r.rel_mc = mc_avg > 0.0 ? rel_mc(r.avg_error, mc_avg) : std::nan("");

  result.report_path = run.run_dir / "report.csv";
  write_file(result.report_path,
             [&](std::ostream &o) { write_report_csv(o, result.rows); });
  return result;
}

TradeoffCurve sweep_lambda(const PreparedRun &run, const ExpansionConfig &config,
                           Method method, std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("sweep_lambda: empty grid");
  if (method == Method::kFineTune)
    throw ConfigError("sweep_lambda: fine-tuning has no trade-off weight");
  std::vector<double> values(grid.begin(), grid.end());
  std::sort(values.begin(), values.end());

  TradeoffCurve curve;
  curve.method = method;
  for (double lambda : values) {
    GridPoint p;
    p.method = method;
    p.weights.scale_distill_by_t_squared = config.distill_t_squared;
    p.weights.temperature = config.grid.temperature.empty() ? 1.0 : config.grid.temperature[0];
    switch (method) {
      case Method::kWca: p.weights.lambda_w = lambda; break;
      case Method::kEwc: p.weights.lambda_e = lambda; break;
      case Method::kSkld: p.weights.lambda_s = lambda; break;
      case Method::kSkldEwc:
        p.weights.lambda_s = lambda;
        p.weights.lambda_e = config.grid.lambda_e.empty() ? 0.0 : config.grid.lambda_e[0];
        break;
      case Method::kFineTune: break;
    }
    const GridResult r = run_grid_point(run, config, p);
    curve.points.push_back({lambda, r.original_eval, r.new_eval});
  }
  write_file(run.run_dir / ("tradeoff-" + std::string(method_name(method)) + ".csv"),
             [&](std::ostream &o) { write_tradeoff_csv(o, curve); });
  return curve;
}

TradeoffCurve sweep_lambda(const ExpansionConfig &config, Method method,
                           std::span<const double> grid) {
  PreparedRun run = prepare_run(config);
  ensure_artifacts(run, config, method,
                   config.grid.temperature.empty() ? 1.0 : config.grid.temperature[0]);
  return sweep_lambda(run, config, method, grid);
}

void write_tradeoff_csv(std::ostream &out, const TradeoffCurve &curve) {
  out << "method,lambda,org_error,new_error\n";
  for (const TradeoffPoint &p : curve.points)
    out << method_name(curve.method) << ',' << number(p.lambda) << ','
        << percent(p.org_error) << ',' << percent(p.new_error) << '\n';
}

std::vector<ForgettingRow> forgetting_curve(const PreparedRun &run,
                                            const ExpansionConfig &config) {
  GridPoint skld;
  skld.method = Method::kSkld;
  skld.weights.scale_distill_by_t_squared = config.distill_t_squared;
  if (config.forgetting_lambda_s) {
    skld.weights.lambda_s = *config.forgetting_lambda_s;
    skld.weights.temperature = config.forgetting_temperature.value_or(
        config.grid.temperature.empty() ? 1.0 : config.grid.temperature[0]);
  } else {
    std::vector<GridResult> tuned;
    for (const GridPoint &p : grid_points(config, Method::kSkld))
      tuned.push_back(run_grid_point(run, config, p));
    skld = tuned[select_best(tuned)].point;
  }
  GridPoint ft;
  ft.method = Method::kFineTune;

  std::vector<ForgettingRow> rows;
  for (const GridPoint &p : {ft, skld}) {
    const GridResult r = run_grid_point(run, config, p);
    const std::string name = p.method == Method::kFineTune ? "FT" : "SKLD";
    for (const EpochLog &e : r.log) {
      const double org = e.error("original_eval");
      const double neu = e.error("new_eval");
      rows.push_back({name, e.epoch, org, neu, avg_error(org, neu)});
    }
  }
  write_file(run.run_dir / "forgetting.csv",
             [&](std::ostream &o) { write_forgetting_csv(o, rows); });
  return rows;
}

std::vector<ForgettingRow> forgetting_curve(const ExpansionConfig &config) {
  PreparedRun run = prepare_run(config);
  for (double t : config.grid.temperature) ensure_artifacts(run, config, Method::kSkld, t);
  if (config.forgetting_temperature)
    ensure_artifacts(run, config, Method::kSkld, *config.forgetting_temperature);
  return forgetting_curve(run, config);
}

void write_forgetting_csv(std::ostream &out, std::span<const ForgettingRow> rows) {
  out << "method,epoch,org_error,new_error,avg_error\n";
  for (const ForgettingRow &r : rows)
    out << r.method << ',' << r.epoch << ',' << percent(r.org_error) << ','
        << percent(r.new_error) << ',' << percent(r.avg_error) << '\n';
}

}  // namespace domexp
