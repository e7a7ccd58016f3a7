// tests/checkpoint-test.cc

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

#include <cstring>
#include <filesystem>
#include <sstream>

#include "domexp/checkpoint.h"
#include "domexp/errors.h"
#include "test-util.h"

namespace domexp {
namespace {

TEST(ModelCheckpoint, RoundTripIsBitExact) {
  Rng rng(1);
  ParamVector p = testing::random_params(NetConfig{5, {7, 3}, 4}, rng);
  p.flat()[0] = -0.0;
  p.flat()[1] = 1e-310;
  std::stringstream buf;
  write_model(buf, p, 123);
  const ModelCheckpoint c = read_model(buf);
  EXPECT_EQ(c.seed, 123u);
  EXPECT_EQ(c.params.config(), p.config());
  ASSERT_EQ(c.params.size(), p.size());
  EXPECT_EQ(0, std::memcmp(c.params.flat().data(), p.flat().data(),
                           p.size() * sizeof(double)));
}

TEST(ModelCheckpoint, FileRoundTrip) {
  Rng rng(2);
  const ParamVector p = testing::random_params(NetConfig{3, {}, 2}, rng);
  const auto path = std::filesystem::temp_directory_path() / "domexp-ckpt-test.bin";
  save_model(path, p, 9);
  EXPECT_EQ(load_model(path).params, p);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), Error);
}

TEST(ModelCheckpoint, RejectsGarbageAndTruncation) {
  std::stringstream junk("not a checkpoint at all");
  EXPECT_THROW(read_model(junk), Error);

  Rng rng(3);
  std::stringstream buf;
  write_model(buf, testing::random_params(NetConfig{3, {4}, 2}, rng), 1);
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_model(cut), Error);

  std::stringstream fisher_buf;
  write_fisher(fisher_buf, FisherDiagonal{{1.0, 2.0}, 1.0});
  EXPECT_THROW(read_model(fisher_buf), Error);
}

TEST(FisherCheckpoint, RoundTrip) {
  const FisherDiagonal f{{0.0, 1e-20, 3.5, 7.25}, 0.75};
  std::stringstream buf;
  write_fisher(buf, f);
  EXPECT_EQ(read_fisher(buf), f);
}

TEST(SoftTargetCheckpoint, RoundTrip) {
  Rng rng(4);
  const SoftTargets s{testing::random_prob_rows(6, 4, rng), 2.0};
  std::stringstream buf;
  write_soft_targets(buf, s);
  EXPECT_EQ(read_soft_targets(buf), s);
}

}  // namespace
}  // namespace domexp
