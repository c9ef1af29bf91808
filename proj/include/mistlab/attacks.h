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

#ifndef MISTLAB_ATTACKS_H_
#define MISTLAB_ATTACKS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mistlab/dataset.h"
#include "mistlab/params.h"
#include "mistlab/shadow.h"

namespace mistlab {

// Instances to attack plus their ground-truth membership in the target.
struct EvalSet {
  LabeledDataset data;
  std::vector<bool> is_member;

  static EvalSet FromSplit(const LabeledDataset& all, const SplitSpec& split);
};

// One membership score per instance; higher means more member-like.
struct AttackScores {
  std::string attack_name;
  std::vector<InstanceId> ids;
  std::vector<double> scores;
  std::vector<bool> is_member;
  std::vector<int> labels;         // class tags for class-conditional metrics
  std::vector<bool> fallback;      // instance scored by a fallback path
  std::map<std::string, std::string> metadata;

  // Throws unless all vectors line up and every score is finite.
  void Validate() const;
};

// Header "#mistlab-attack v1 name=<attack>", then instance_id, truth (0/1),
// score per tab-separated line.
void WriteAttackScores(const AttackScores& scores, std::ostream& out);
AttackScores ReadAttackScores(std::istream& in);
void WriteAttackScoresFile(const AttackScores& scores, const std::filesystem::path& path);
AttackScores ReadAttackScoresFile(const std::filesystem::path& path);

// Mean per-feature standard deviation; the unit for perturbation sizes.
double FeatureScale(const LabeledDataset& data);

// LOSS: score = -loss(x). The average-training-loss threshold is kept in
// metadata["threshold"].
AttackScores LossAttack(const ModelParams& target, const EvalSet& eval,
                        double avg_train_loss);

// -(1 - p_y) log p_y - sum_{i != y} p_i log(1 - p_i), logs clamped.
double ModifiedEntropy(std::span<const double> probs, int label);

// Score = -Mentr; class tags are attached for per-class thresholds.
AttackScores MentrAttack(const ModelParams& target, const EvalSet& eval);

struct ClassNnSpec {
  std::vector<int> hidden = {32};
  int epochs = 20;
  double lr = 0.05;
  int batch_size = 64;
  std::size_t min_rows = 8;  // classes with fewer shadow rows use the global model
  std::uint64_t seed = 0;
};

// A shadow model's prediction on one pool instance.
struct ShadowPrediction {
  int label = 0;
  std::vector<double> probs;
  bool in = false;
};

// Per-class membership classifiers over descending-sorted prediction vectors.
// Scores are the classifier's member probability, in [0, 1].
AttackScores ClassNnAttackFromPredictions(std::span<const ShadowPrediction> shadow_rows,
                                          const Matrix& target_probs,
                                          const EvalSet& eval, const ClassNnSpec& spec);

AttackScores ClassNnAttack(const ShadowEnsemble& ensemble, const LabeledDataset& pool,
                           const ModelParams& target, const EvalSet& eval,
                           const ClassNnSpec& spec);

struct PerturbConfig {
  double sigma = 0.05;  // absolute noise std
  int samples = 50;
};

// Fraction of Gaussian perturbations x + eps whose loss is strictly higher
// than the loss at x.
AttackScores PerturbAttack(const ModelParams& target, const EvalSet& eval,
                           const PerturbConfig& cfg, std::uint64_t seed);

// log N(s; mu_in, sigma_in) - log N(s; mu_out, sigma_out).
double LiraLogRatio(double score, const GaussianPair& g);

// Online LiRA: per-instance Gaussian fits from the shadow records, scored at
// the target model's statistic of the same kind.
AttackScores LiraAttack(const std::map<InstanceId, ShadowRecord>& records,
                        const ModelParams& target, const EvalSet& eval,
                        ScoreKind kind, double sigma_floor = kSigmaFloor);

struct CanaryConfig {
  int n_canaries = 4;
  int opt_steps = 20;
  double step_size = 0.05;   // absolute
  double init_noise = 0.01;  // absolute noise std
};

// Mean over canaries of the LiRA log ratio measured at the canary, where each
// canary ascends mean_OUT loss - mean_IN loss over the shadow models.
// Instances with fewer than two IN or OUT shadows cannot be fitted; they get
// the neutral score 0 and are flagged in `fallback`.
AttackScores CanaryAttack(const ShadowEnsemble& ensemble, const ModelParams& target,
                          const EvalSet& eval, const CanaryConfig& cfg,
                          ScoreKind kind, std::uint64_t seed,
                          double sigma_floor = kSigmaFloor);

// Objective maximised by a canary: mean OUT loss minus mean IN loss at x.
double CanaryObjective(std::span<const ModelParams> in_models,
                       std::span<const ModelParams> out_models,
                       std::span<const double> x, int label);

}  // namespace mistlab

#endif  // MISTLAB_ATTACKS_H_
