//
// Copyright 2026 The mistlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mistlab/error.h"
#include "mistlab/shadow.h"
#include "test_util.h"

namespace mistlab {
namespace {

TEST(FitGaussiansTest, ZeroVarianceIsFloored) {
  const std::vector<double> in = {1, 1, 1}, out = {3, 3, 3};
  const GaussianPair g = FitGaussians(in, out);
  EXPECT_EQ(g.mu_in, 1.0);
  EXPECT_EQ(g.mu_out, 3.0);
  EXPECT_EQ(g.sigma_in, kSigmaFloor);
  EXPECT_EQ(g.sigma_out, kSigmaFloor);
}

TEST(FitGaussiansTest, UsesUnbiasedStddev) {
  const std::vector<double> in = {0, 2}, out = {5, 7, 9};
  const GaussianPair g = FitGaussians(in, out);
  EXPECT_DOUBLE_EQ(g.mu_in, 1.0);
  EXPECT_DOUBLE_EQ(g.sigma_in, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(g.sigma_out, 2.0);
}

TEST(FitGaussiansTest, SingleOutScoreIsAnError) {
  ShadowRecord r;
  r.instance_id = 42;
  r.in_scores = {0.1, 0.2};
  r.out_scores = {0.3};
  try {
    FitGaussians(r);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  }
}

TEST(LogitConfidenceTest, MatchesLogOdds) {
  const std::vector<double> p = {0.75, 0.25};
  EXPECT_NEAR(LogitConfidence(p, 0), std::log(3.0), 1e-15);
  EXPECT_NEAR(LogitConfidence(p, 1), -std::log(3.0), 1e-15);
  const std::vector<double> certain = {1.0, 0.0};
  EXPECT_TRUE(std::isfinite(LogitConfidence(certain, 0)));
}

TEST(ScoreKindTest, NamesRoundTrip) {
  EXPECT_EQ(ParseScoreKind(ToString(ScoreKind::kLoss)), ScoreKind::kLoss);
  EXPECT_EQ(ParseScoreKind(ToString(ScoreKind::kLogitConfidence)),
            ScoreKind::kLogitConfidence);
  EXPECT_ERROR_KIND(ParseScoreKind("hinge"), ErrorKind::kConfig);
}

TEST(ScoresFileTest, RoundTripsLosslessly) {
  ShadowScores s;
  s.num_shadows = 2;
  s.rows = {{7, 0, true, 0.1, 1.0 / 3.0},
            {7, 1, false, 2.718281828459045, -1e-300},
            {9, 0, false, 1e-17, 123456.789}};
  std::stringstream buf;
  WriteScores(s, buf);
  EXPECT_EQ(ReadScores(buf), s);
}

TEST(ScoresFileTest, RejectsMalformedInput) {
  std::stringstream no_header("1\t0\t1\t0.5\t0.5\n");
  EXPECT_ERROR_KIND(ReadScores(no_header), ErrorKind::kData);
  std::stringstream bad_flag("#mistlab-scores v1 S=1 kind=both\n1\t0\t2\t0.5\t0.5\n");
  EXPECT_ERROR_KIND(ReadScores(bad_flag), ErrorKind::kData);
  std::stringstream short_row("#mistlab-scores v1 S=1 kind=both\n1\t0\t1\t0.5\n");
  EXPECT_ERROR_KIND(ReadScores(short_row), ErrorKind::kData);
}

TEST(CollectRecordsTest, GroupsByInstanceInShadowOrder) {
  ShadowScores s;
  s.num_shadows = 3;
  s.rows = {{1, 2, true, 0.3, 3}, {1, 0, true, 0.1, 1}, {1, 1, false, 0.2, 2}};
  const auto records = CollectRecords(s, ScoreKind::kLogitConfidence);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records.at(1).in_scores, (std::vector<double>{1, 3}));
  EXPECT_EQ(records.at(1).out_scores, (std::vector<double>{2}));
}

class ShadowEnsembleTest : public ::testing::Test {
 protected:
  static MistConfig Recipe() {
    MistConfig cfg;
    cfg.hidden = {8};
    cfg.epochs = 3;
    cfg.batch_size = 16;
    return cfg;
  }
  LabeledDataset pool_ = GenerateSynthetic({3, 4, 14, 1.0, 1.0, 5});
};

TEST_F(ShadowEnsembleTest, FlagsAgreeWithMembership) {
  const ShadowEnsemble e = TrainShadowEnsemble(pool_, 6, Recipe(), 11);
  ASSERT_EQ(e.scores.rows.size(), 6 * pool_.size());
  for (const ScoreRow& r : e.scores.rows) {
    EXPECT_EQ(r.in, e.IsMember(r.shadow_index, r.instance_id));
  }
  for (const auto& [id, rec] : CollectRecords(e.scores, ScoreKind::kLoss)) {
    EXPECT_GE(rec.in_scores.size(), 2u) << id;
    EXPECT_GE(rec.out_scores.size(), 2u) << id;
  }
}

TEST_F(ShadowEnsembleTest, SameSeedGivesIdenticalScoresFile) {
  std::stringstream a, b;
  WriteScores(TrainShadowEnsemble(pool_, 4, Recipe(), 3).scores, a);
  WriteScores(TrainShadowEnsemble(pool_, 4, Recipe(), 3, ShadowSplitMode::kBalanced, 3).scores,
              b);
  EXPECT_EQ(a.str(), b.str());
}

TEST_F(ShadowEnsembleTest, MistRecipeIsUsedForShadows) {
  MistConfig mist = Recipe();
  mist.submodels = 2;
  mist.lambda = 1.0;
  const ShadowEnsemble plain = TrainShadowEnsemble(pool_, 4, Recipe(), 3);
  const ShadowEnsemble defended = TrainShadowEnsemble(pool_, 4, mist, 3);
  EXPECT_EQ(plain.members, defended.members);
  EXPECT_FALSE(plain.models[0] == defended.models[0]);
}

TEST_F(ShadowEnsembleTest, TooFewShadowsIsAnError) {
  EXPECT_ERROR_KIND(TrainShadowEnsemble(pool_, 2, Recipe(), 1), ErrorKind::kConfig);
}

}  // namespace
}  // namespace mistlab
