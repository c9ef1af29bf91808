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

#ifndef MISTLAB_SHADOW_H_
#define MISTLAB_SHADOW_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "mistlab/dataset.h"
#include "mistlab/params.h"
#include "mistlab/training.h"

namespace mistlab {

// Which per-instance statistic feeds the likelihood-ratio test.
enum class ScoreKind {
  kLoss,             // -log p_y
  kLogitConfidence,  // log(p_y / (1 - p_y)), both terms clamped to [1e-12, 1]
};

std::string_view ToString(ScoreKind kind);
ScoreKind ParseScoreKind(std::string_view name);

// Default floor on fitted standard deviations.
inline constexpr double kSigmaFloor = 1e-3;

// log p_y - log(sum_{k != y} p_k) with both probabilities clamped.
double LogitConfidence(std::span<const double> probs, int label);

// One (instance, shadow model) observation.
struct ScoreRow {
  InstanceId instance_id = 0;
  int shadow_index = 0;
  bool in = false;
  double loss = 0.0;
  double logit_confidence = 0.0;

  double Score(ScoreKind kind) const {
    return kind == ScoreKind::kLoss ? loss : logit_confidence;
  }
  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

struct ShadowScores {
  int num_shadows = 0;
  std::vector<ScoreRow> rows;
  friend bool operator==(const ShadowScores&, const ShadowScores&) = default;
};

// Tab-separated text, header "#mistlab-scores v1 S=<S> kind=both", then
// instance_id, shadow_index, in_flag, loss, logit_confidence per line. Reals
// are written with 17 significant digits so reading back is lossless.
void WriteScores(const ShadowScores& scores, std::ostream& out);
ShadowScores ReadScores(std::istream& in);
void WriteScoresFile(const ShadowScores& scores, const std::filesystem::path& path);
ShadowScores ReadScoresFile(const std::filesystem::path& path);

// IN and OUT observations of one instance across the shadow models.
struct ShadowRecord {
  InstanceId instance_id = 0;
  std::vector<double> in_scores;
  std::vector<double> out_scores;
  ScoreKind kind = ScoreKind::kLogitConfidence;
};

// Groups rows by instance, keeping shadow-index order inside each record.
std::map<InstanceId, ShadowRecord> CollectRecords(const ShadowScores& scores,
                                                  ScoreKind kind);

struct GaussianPair {
  double mu_in = 0.0;
  double sigma_in = 1.0;
  double mu_out = 0.0;
  double sigma_out = 1.0;
};

// Sample means and unbiased standard deviations, each sigma floored.
// Requires at least two scores on each side.
GaussianPair FitGaussians(const ShadowRecord& record,
                          double sigma_floor = kSigmaFloor);
GaussianPair FitGaussians(std::span<const double> in_scores,
                          std::span<const double> out_scores,
                          double sigma_floor = kSigmaFloor);

// Shadow models together with their training ids and pool scores.
struct ShadowEnsemble {
  std::vector<ModelParams> models;
  std::vector<std::vector<InstanceId>> members;  // sorted, one list per model
  ShadowScores scores;

  bool IsMember(int shadow, InstanceId id) const;
};

// Scores every pool instance under every model, flagging membership.
ShadowScores ScoreShadowModels(std::span<const ModelParams> models,
                               const std::vector<std::vector<InstanceId>>& members,
                               const LabeledDataset& pool);

// Trains `shadows` models with the target recipe (baseline or MIST) on member
// sets drawn from `pool`. Shadow s uses the stream DeriveSeed(seed, {s}).
// Requires shadows >= 4; fails with the uncovered ids when some instance is
// not IN and OUT for at least two models each.
ShadowEnsemble TrainShadowEnsemble(const LabeledDataset& pool, int shadows,
                                   const MistConfig& recipe, std::uint64_t seed,
                                   ShadowSplitMode mode = ShadowSplitMode::kBalanced,
                                   int threads = 1);

}  // namespace mistlab

#endif  // MISTLAB_SHADOW_H_
