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
#include <random>

#include "mistlab/error.h"
#include "mistlab/training.h"
#include "test_util.h"

namespace mistlab {
namespace {

using testing::NumericGradient;
using testing::RandomLabels;
using testing::RandomMatrix;
using testing::RandomModel;
using testing::RelativeError;

std::vector<ModelParams> RandomPeers(const ModelParams& like, int count, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<ModelParams> peers;
  for (int i = 0; i < count; ++i) {
    const ModelParams base = ModelParams::GlorotUniform(like.layer_dims(), rng());
    std::vector<double> v(base.values().begin(), base.values().end());
    for (double& x : v) x += noise(rng);
    peers.emplace_back(like.layer_dims(), std::move(v));
  }
  return peers;
}

TEST(DefaultT1Test, CoversTheSubsetOnce) {
  EXPECT_EQ(DefaultT1(100, 25), 4);
  EXPECT_EQ(DefaultT1(101, 25), 5);
  EXPECT_EQ(DefaultT1(10, 100), 1);
  EXPECT_THROW(DefaultT1(10, 0), Error);
}

TEST(XdiffTest, VariantNamesRoundTrip) {
  for (XdiffVariant v : {XdiffVariant::kL1, XdiffVariant::kL2, XdiffVariant::kKL}) {
    EXPECT_EQ(ParseXdiffVariant(ToString(v)), v);
  }
  EXPECT_THROW(ParseXdiffVariant("L3"), Error);
}

class XdiffGradientTest : public ::testing::TestWithParam<XdiffVariant> {};

TEST_P(XdiffGradientTest, MatchesFiniteDifferences) {
  const XdiffVariant variant = GetParam();
  Rng rng(21 + static_cast<int>(variant));
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 20; ++trial) {
    const ModelParams w = RandomModel(rng);
    const auto peers = RandomPeers(w, 3, rng);
    const Matrix x = RandomMatrix(5, w.input_dim(), rng);
    const auto y = RandomLabels(5, w.num_classes(), rng);
    const Matrix mean = PeerMeanPredictions(peers, x);
    if (variant == XdiffVariant::kL1) {
      // Stay away from the kink of |.|.
      const Matrix p = PredictBatch(w, x);
      bool near_kink = false;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        near_kink |= std::abs(p(r, y[r]) - mean(r, y[r])) < 1e-3;
      }
      if (near_kink) continue;
    }
    const LossAndGrad lg = XdiffLossAndGradWithTargets(w, x, y, mean, variant);
    const auto numeric = NumericGradient(w, [&](const ModelParams& q) {
      return XdiffLossAndGradWithTargets(q, x, y, mean, variant).loss;
    });
    EXPECT_LT(RelativeError(lg.grad.values, numeric), 1e-4) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

INSTANTIATE_TEST_SUITE_P(AllVariants, XdiffGradientTest,
                         ::testing::Values(XdiffVariant::kL1, XdiffVariant::kL2,
                                           XdiffVariant::kKL));

TEST(XdiffTest, IdenticalPeersGiveZeroLossAndGradient) {
  Rng rng(31);
  for (XdiffVariant variant : {XdiffVariant::kL1, XdiffVariant::kL2, XdiffVariant::kKL}) {
    const ModelParams w = RandomModel(rng);
    const std::vector<ModelParams> peers(3, w);
    const Matrix x = RandomMatrix(8, w.input_dim(), rng);
    const auto y = RandomLabels(8, w.num_classes(), rng);
    const LossAndGrad lg = XdiffLossAndGrad(w, x, y, peers, variant);
    if (variant == XdiffVariant::kKL) {
      EXPECT_LE(std::abs(lg.loss), 1e-12);
      for (double g : lg.grad.values) EXPECT_LE(std::abs(g), 1e-12);
    } else {
      EXPECT_EQ(lg.loss, 0.0);
      for (double g : lg.grad.values) EXPECT_EQ(g, 0.0);
    }
  }
}

TEST(XdiffTest, LossIsNonNegative) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    for (XdiffVariant variant : {XdiffVariant::kL1, XdiffVariant::kL2, XdiffVariant::kKL}) {
      const ModelParams w = RandomModel(rng);
      const auto peers = RandomPeers(w, 2, rng);
      const Matrix x = RandomMatrix(4, w.input_dim(), rng);
      const auto y = RandomLabels(4, w.num_classes(), rng);
      EXPECT_GE(XdiffLossAndGrad(w, x, y, peers, variant).loss, 0.0);
    }
  }
}

TEST(XdiffTest, PeersAreNotModified) {
  Rng rng(33);
  const ModelParams w = RandomModel(rng);
  const auto peers = RandomPeers(w, 3, rng);
  std::vector<std::uint64_t> before;
  for (const auto& p : peers) before.push_back(p.Checksum());
  const Matrix x = RandomMatrix(4, w.input_dim(), rng);
  XdiffLossAndGrad(w, x, RandomLabels(4, w.num_classes(), rng), peers, XdiffVariant::kL2);
  for (std::size_t i = 0; i < peers.size(); ++i) EXPECT_EQ(peers[i].Checksum(), before[i]);
}

TEST(XdiffTest, PeerMeanOfIdenticalPeersIsExact) {
  Rng rng(34);
  const ModelParams w = RandomModel(rng);
  const std::vector<ModelParams> peers(5, w);
  const Matrix x = RandomMatrix(6, w.input_dim(), rng);
  EXPECT_EQ(PeerMeanPredictions(peers, x), PredictBatch(w, x));
}

LabeledDataset SmallData(std::uint64_t seed) {
  return GenerateSynthetic({4, 6, 20, 1.5, 1.0, seed});
}

MistConfig SmallRecipe() {
  MistConfig cfg;
  cfg.hidden = {12};
  cfg.epochs = 5;
  cfg.batch_size = 8;
  cfg.lr = 0.1;
  cfg.seed = 17;
  return cfg;
}

TEST(MistTrainTest, DegenerateCaseEqualsBaselineBitwise) {
  const LabeledDataset data = SmallData(1);
  for (bool mixup : {false, true}) {
    MistConfig cfg = SmallRecipe();
    if (mixup) cfg.mixup_alpha = 1.0;
    const TrainLog mist = MistTrain(data, nullptr, cfg);
    const TrainLog base = BaselineTrain(data, nullptr, cfg);
    EXPECT_EQ(mist.final_params, base.final_params);
    ASSERT_EQ(mist.epochs.size(), base.epochs.size());
    for (std::size_t e = 0; e < mist.epochs.size(); ++e) {
      EXPECT_EQ(mist.epochs[e].ce_loss, base.epochs[e].ce_loss);
    }
  }
}

TEST(MistTrainTest, RejectsLambdaWithoutPeers) {
  MistConfig cfg = SmallRecipe();
  cfg.lambda = 1.0;
  EXPECT_THROW(MistTrain(SmallData(1), nullptr, cfg), Error);
}

TEST(MistTrainTest, AggregateIsMeanOfFinalSubmodels) {
  MistConfig cfg = SmallRecipe();
  cfg.submodels = 3;
  cfg.lambda = 2.0;
  const TrainLog log = MistTrain(SmallData(2), nullptr, cfg);
  ASSERT_EQ(log.final_submodels.size(), 3u);
  EXPECT_EQ(log.final_params, AverageParams(log.final_submodels));
}

TEST(MistTrainTest, ThreadsDoNotChangeTheResult) {
  MistConfig cfg = SmallRecipe();
  cfg.submodels = 4;
  cfg.lambda = 4.0;
  const LabeledDataset data = SmallData(3);
  const TrainLog one = MistTrain(data, nullptr, cfg);
  cfg.threads = 3;
  const TrainLog three = MistTrain(data, nullptr, cfg);
  EXPECT_EQ(one.final_params, three.final_params);
}

TEST(MistTrainTest, ZeroEpochsReturnsInitialisation) {
  MistConfig cfg = SmallRecipe();
  cfg.epochs = 0;
  const LabeledDataset data = SmallData(4);
  const TrainLog base = BaselineTrain(data, nullptr, cfg);
  cfg.submodels = 2;
  cfg.lambda = 1.0;
  const TrainLog mist = MistTrain(data, nullptr, cfg);
  EXPECT_EQ(mist.final_params, base.final_params);
  EXPECT_TRUE(mist.epochs.empty());
}

TEST(MistTrainTest, RecordsValidationAccuracy) {
  MistConfig cfg = SmallRecipe();
  cfg.submodels = 2;
  const LabeledDataset data = SmallData(5);
  const LabeledDataset val = GenerateSynthetic({4, 6, 5, 1.5, 1.0, 5});
  // Different ids are required; shift them.
  std::vector<InstanceId> ids(val.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 1000 + static_cast<InstanceId>(i);
  const LabeledDataset shifted(val.features(), val.labels(), ids, 4);
  const TrainLog log = MistTrain(data, &shifted, cfg);
  ASSERT_EQ(log.epochs.size(), 5u);
  EXPECT_FALSE(std::isnan(log.epochs.back().validation_accuracy));
  EXPECT_GT(log.epochs.back().train_accuracy, 0.5);
}

TEST(MistTrainTest, LargerLambdaDoesNotRaiseFinalXdiff) {
  // Statistical expectation over three seeds; the majority must hold.
  int holds = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    MistConfig cfg = SmallRecipe();
    cfg.submodels = 4;
    cfg.epochs = 8;
    cfg.seed = seed;
    cfg.variant = XdiffVariant::kL2;
    std::vector<double> finals;
    for (double lambda : {0.0, 2.0, 8.0}) {
      cfg.lambda = lambda;
      finals.push_back(MistTrain(SmallData(seed), nullptr, cfg).epochs.back().xdiff_loss);
    }
    holds += finals[1] <= finals[0] && finals[2] <= finals[1];
  }
  EXPECT_GE(holds, 2);
}

}  // namespace
}  // namespace mistlab
