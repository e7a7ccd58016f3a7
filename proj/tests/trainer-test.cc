// tests/trainer-test.cc

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
#include <sstream>

#include "domexp/datagen.h"
#include "domexp/errors.h"
#include "domexp/regularizers.h"
#include "domexp/trainer.h"
#include "test-util.h"

namespace domexp {
namespace {

ParamVector scalar_param(double v) {
  ParamVector p(NetConfig{1, {}, 1});
  p.weights(0)(0, 0) = v;
  return p;
}

TEST(AdamStep, ZeroGradientLeavesParamsUnchanged) {
  Rng rng(1);
  ParamVector p = testing::random_params(NetConfig{3, {4}, 2}, rng);
  const ParamVector before = p;
  AdamState s = AdamState::for_params(p);
  adam_step(p, zeros_like(p), s, 0.001);
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.step_count, 1);
}

TEST(AdamStep, FirstStepClosedForm) {
  ParamVector p = scalar_param(0.0);
  ParamVector g = scalar_param(1.0);
  g.bias(0)[0] = 1.0;
  AdamState s = AdamState::for_params(p);
  adam_step(p, g, s, 0.001);
  EXPECT_NEAR(p.weights(0)(0, 0), -0.000999999990, 1e-15);
  EXPECT_NEAR(p.bias(0)[0], -0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(AdamStep, ThreeStepTrajectory) {
  // Reference recurrence evaluated outside the library for g = 1, -2, 0.5.
  const double expected[] = {-0.000999999990000001, -0.0006338964652792523,
                             -0.0004972058032617859};
  ParamVector p = scalar_param(0.0);
  AdamState s = AdamState::for_params(p);
  const double grads[] = {1.0, -2.0, 0.5};
  for (int t = 0; t < 3; ++t) {
    adam_step(p, scalar_param(grads[t]), s, 0.001);
    EXPECT_NEAR(p.weights(0)(0, 0), expected[t], 1e-16) << "step " << t + 1;
  }
}

TEST(AdamStep, LayoutMismatchThrows) {
  ParamVector p(NetConfig{2, {}, 2});
  AdamState s = AdamState::for_params(p);
  EXPECT_THROW(adam_step(p, ParamVector(NetConfig{3, {}, 2}), s, 0.001), DimensionError);
  EXPECT_THROW(adam_step(p, zeros_like(p), s, 0.0), InvalidArgument);
}

TEST(Evaluate, PerfectAndHandCounted) {
  // Identity net: logits = features, so the argmax of each row is the prediction.
  ParamVector p(NetConfig{3, {}, 3});
  for (std::size_t i = 0; i < 3; ++i) p.weights(0)(i, i) = 1.0;
  Dataset d;
  d.num_classes = 3;
  d.features = Matrix::from_rows(
      {{5, 0, 0}, {0, 2, 1}, {0, 0, 3}, {1, 1, 0}, {2, 2, 2}, {0, 9, 1}});
  d.labels = {0, 1, 2, 1, 0, 2};
  // rows 3 and 4 tie: lowest index wins (0 and 0). Wrong: row 3, row 5.
  EXPECT_DOUBLE_EQ(evaluate(p, d), 2.0 / 6.0);
  d.labels = {0, 1, 2, 0, 0, 1};
  EXPECT_EQ(evaluate(p, d), 0.0);
}

TEST(Evaluate, ConstantLogitsOnBalancedData) {
  ParamVector p(NetConfig{2, {}, 4});
  p.bias(0)[2] = 1.0;
  Rng rng(3);
  const Dataset d = testing::random_dataset(10000, 2, 4, rng);
  EXPECT_NEAR(evaluate(p, d), 0.75, 0.05 * 0.75);
  Dataset empty;
  empty.num_classes = 4;
  EXPECT_THROW(evaluate(p, empty), InvalidArgument);
}

Dataset separable_set(std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.num_classes = 2;
  d.features = Matrix(200, 2);
  for (std::size_t i = 0; i < 200; ++i) {
    const int y = static_cast<int>(i % 2);
    d.features(i, 0) = (y == 0 ? -2.0 : 2.0) + 0.5 * rng.normal();
    d.features(i, 1) = rng.normal();
    d.labels.push_back(y);
  }
  return d;
}

TEST(TrainOriginal, SeparableSetIsLearned) {
  const Dataset train = separable_set(1), dev = separable_set(2);
  TrainConfig c = TrainConfig::original_defaults();
  c.seed = 5;
  const TrainResult r = train_original(NetConfig{2, {16}, 2}, train, dev, c);
  EXPECT_LE(evaluate(r.params, train), 0.01);
  ASSERT_FALSE(r.log.empty());
  EXPECT_EQ(r.log.front().epoch, 1u);
}

TEST(TrainOriginal, PatienceZeroRunsOneEpoch) {
  const Dataset train = separable_set(1), dev = separable_set(2);
  TrainConfig c = TrainConfig::original_defaults();
  c.early_stop_patience = 0;
  const TrainResult r = train_original(NetConfig{2, {8}, 2}, train, dev, c);
  EXPECT_EQ(r.log.size(), 1u);
}

TEST(TrainOriginal, ReturnsBestDevCheckpointAndIsDeterministic) {
  DomainSpec spec;
  spec.seed = 4;
  spec.samples_per_class = 30;
  spec.noise_std = 1.5;
  const DatasetSplit s = split(generate_domain(spec), {}, 9);
  const NetConfig net{20, {16}, 8};
  TrainConfig c = TrainConfig::original_defaults();
  c.seed = 3;
  c.max_epochs = 30;
  c.early_stop_patience = 3;
  const TrainResult a = train_original(net, s.train, s.dev, c);
  const TrainResult b = train_original(net, s.train, s.dev, c);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.log, b.log);
  double best = 1.0;
  for (const EpochLog &row : a.log) best = std::min(best, row.error("dev"));
  EXPECT_EQ(evaluate(a.params, s.dev), best);
  for (const EpochLog &row : a.log) EXPECT_TRUE(std::isfinite(row.train_loss));
}

struct ExpansionFixture {
  DatasetSplit orig, fresh;
  ParamVector theta_o;
  FisherDiagonal fisher;
  SoftTargets soft;
  TrainConfig config;
};

ExpansionFixture make_expansion(double temperature = 2.0) {
  ExpansionFixture f;
  DomainSpec a;
  a.seed = 7;
  a.samples_per_class = 24;
  DomainSpec b = a;
  b.name = "new";
  b.domain_shift = 1.0;
  b.offset_scale = 5.0;
  f.orig = split(generate_domain(a), {}, 1);
  f.fresh = split(generate_domain(b), {}, 2);
  TrainConfig oc = TrainConfig::original_defaults();
  oc.seed = 7;
  oc.max_epochs = 10;
  f.theta_o = train_original(NetConfig{20, {12}, 8}, f.orig.train, f.orig.dev, oc).params;
  f.fisher = estimate_fisher_diagonal(f.theta_o, f.orig.train);
  f.soft = precompute_soft_targets(f.theta_o, f.fresh.train.features, temperature);
  f.config = TrainConfig::expansion_defaults();
  f.config.seed = 11;
  f.config.batch_size = 8;
  f.config.fixed_epochs = 3;
  return f;
}

std::vector<ParamVector> trajectory(const ExpansionFixture &f, const ExpansionSpec &spec) {
  std::vector<ParamVector> steps;
  expand_domain(f.theta_o, f.fresh.train, spec, f.config, {},
                [&](std::size_t, const ParamVector &p) { steps.push_back(p); });
  return steps;
}

TEST(ExpandDomain, SkldWithZeroLambdaIsFineTuning) {
  const ExpansionFixture f = make_expansion();
  ExpansionSpec ft;
  ExpansionSpec sk{Method::kSkld, {}, nullptr, &f.soft};
  sk.weights.temperature = 2.0;
  const auto a = trajectory(f, ft), b = trajectory(f, sk);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << "step " << i;
}

TEST(ExpandDomain, RunsExactlyFixedEpochsAndLogsEvalSets) {
  const ExpansionFixture f = make_expansion();
  const std::vector<NamedSet> sets{{"org", &f.orig.eval}, {"new", &f.fresh.eval}};
  const TrainResult r = expand_domain(f.theta_o, f.fresh.train, {}, f.config, sets);
  ASSERT_EQ(r.log.size(), f.config.fixed_epochs + 1);
  EXPECT_EQ(r.log[0].error("org"), evaluate(f.theta_o, f.orig.eval));
  EXPECT_EQ(r.log.back().error("new"), evaluate(r.params, f.fresh.eval));
  for (std::size_t e = 0; e < r.log.size(); ++e) {
    EXPECT_EQ(r.log[e].epoch, e);
    EXPECT_TRUE(std::isfinite(r.log[e].train_loss));
  }
}

TEST(ExpandDomain, DoesNotMutateInputs) {
  const ExpansionFixture f = make_expansion();
  const ParamVector theta_o = f.theta_o;
  const FisherDiagonal fisher = f.fisher;
  const SoftTargets soft = f.soft;
  ExpansionSpec spec{Method::kSkldEwc, {}, &f.fisher, &f.soft};
  spec.weights.lambda_s = 0.5;
  spec.weights.lambda_e = 1.0;
  spec.weights.temperature = 2.0;
  expand_domain(f.theta_o, f.fresh.train, spec, f.config, {});
  EXPECT_EQ(f.theta_o, theta_o);
  EXPECT_EQ(f.fisher, fisher);
  EXPECT_EQ(f.soft, soft);
}

TEST(ExpandDomain, LargeWcaWeightKeepsParamsClose) {
  const ExpansionFixture f = make_expansion();
  auto distance = [&](double lw) {
    ExpansionSpec spec{Method::kWca};
    spec.weights.lambda_w = lw;
    const TrainResult r = expand_domain(f.theta_o, f.fresh.train, spec, f.config, {});
    double s = 0.0;
    for (std::size_t i = 0; i < r.params.size(); ++i) {
      const double d = r.params.flat()[i] - f.theta_o.flat()[i];
      s += d * d;
    }
    return std::sqrt(s);
  };
  EXPECT_LT(distance(1e6), distance(0.01));
}

TEST(ExpandDomain, DeterministicForSameSeed) {
  const ExpansionFixture f = make_expansion();
  ExpansionSpec spec{Method::kEwc, {}, &f.fisher};
  spec.weights.lambda_e = 0.5;
  const std::vector<NamedSet> sets{{"org", &f.orig.eval}};
  const TrainResult a = expand_domain(f.theta_o, f.fresh.train, spec, f.config, sets);
  const TrainResult b = expand_domain(f.theta_o, f.fresh.train, spec, f.config, sets);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.log, b.log);
}

TEST(ExpandDomain, MissingArtifactsAreConfigErrors) {
  const ExpansionFixture f = make_expansion();
  EXPECT_THROW(expand_domain(f.theta_o, f.fresh.train, {Method::kEwc}, f.config, {}),
               ConfigError);
  EXPECT_THROW(expand_domain(f.theta_o, f.fresh.train, {Method::kSkld}, f.config, {}),
               ConfigError);
  ExpansionSpec wrong_t{Method::kSkld, {}, nullptr, &f.soft};
  wrong_t.weights.temperature = 1.0;
  EXPECT_THROW(expand_domain(f.theta_o, f.fresh.train, wrong_t, f.config, {}),
               ConfigError);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kFineTune, Method::kWca, Method::kEwc, Method::kSkld,
                   Method::kSkldEwc})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_EQ(parse_method("SKLD-EWC"), Method::kSkldEwc);
  EXPECT_THROW(parse_method("lwf"), ConfigError);
}

TEST(EpochLogCsv, HeaderAndRows) {
  const std::vector<EpochLog> log{{0, 1.5, {{"org", 0.25}, {"new", 0.5}}},
                                  {1, 0.75, {{"org", 0.125}, {"new", 0.0}}}};
  std::ostringstream os;
  write_epoch_log_csv(os, log);
  EXPECT_EQ(os.str(),
            "epoch,train_loss,eval_org_error,eval_new_error\n"
            "0,1.5,0.25,0.5\n"
            "1,0.75,0.125,0\n");
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig::expansion_defaults();
  EXPECT_EQ(c.learning_rate, 0.0001);
  EXPECT_EQ(c.fixed_epochs, 20u);
  c.fixed_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace domexp
