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

#ifndef MISTLAB_CONFIG_H_
#define MISTLAB_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mistlab/attacks.h"
#include "mistlab/dataset.h"
#include "mistlab/shadow.h"
#include "mistlab/training.h"

namespace mistlab {

enum class Defense { kNone, kMist, kMistMixup, kMixup };

std::string_view ToString(Defense defense);
Defense ParseDefense(std::string_view name);

enum class AttackKind { kLoss, kMentr, kClassNn, kPerturb, kLira, kCanary };

std::string_view ToString(AttackKind kind);
AttackKind ParseAttackKind(std::string_view name);
// classnn, lira and canary are calibrated on shadow models.
bool NeedsShadows(AttackKind kind);

struct DatasetConfig {
  enum class Source { kSynthetic, kCsv };
  Source source = Source::kSynthetic;
  std::filesystem::path path;  // csv only
  std::string label_column = "label";
  std::optional<int> classes;  // csv only; inferred when unset
  SyntheticSpec synthetic;     // synthetic only
  // "strict" marks the data as integer/binary valued; CANARY is skipped when
  // every feature is 0/1.
  bool strict_integer_features = false;
};

// Flat `key = value` experiment description. See configs/ for the full key
// list with comments.
struct ExperimentConfig {
  std::string experiment = "experiment";
  DatasetConfig dataset;
  SplitSizes split;
  Defense defense = Defense::kNone;
  MistConfig recipe;  // model, train.*, mist.*, mixup.* keys
  double mixup_alpha = 1.0;

  int shadows = 16;
  ShadowSplitMode shadow_split = ShadowSplitMode::kBalanced;
  ScoreKind score_kind = ScoreKind::kLogitConfidence;

  std::vector<AttackKind> attacks = {AttackKind::kLoss, AttackKind::kMentr,
                                     AttackKind::kLira};
  std::vector<double> fpr_targets = {0.001, 0.005, 0.01};

  double perturb_sigma_scale = 0.05;  // times FeatureScale
  int perturb_samples = 50;
  int canary_count = 4;
  int canary_steps = 20;
  double canary_step_scale = 0.05;   // times FeatureScale
  double canary_noise_scale = 0.01;  // times FeatureScale
  std::size_t canary_eval_limit = 0;  // 0: every evaluation instance
  ClassNnSpec classnn;

  std::vector<double> lambda_grid = {0.0, 4.0, 8.0, 12.0};
  double max_accuracy_drop = 0.01;
  std::vector<XdiffVariant> ablate_variants = {XdiffVariant::kL1, XdiffVariant::kL2,
                                               XdiffVariant::kKL};

  int oracle_removals = 8;
  std::vector<double> oracle_lambdas = {0.0, 8.0};

  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path output_dir = "runs";

  // The training recipe for the configured defense: `none` and `mixup` train
  // a single model with lambda 0, mixup variants set mixup_alpha.
  MistConfig TargetRecipe() const;
  MistConfig RecipeFor(Defense defense) const;

  // Cross-field checks; messages name the offending key.
  void Validate() const;

  // Canonical `key = value` dump, parseable by ParseConfig.
  std::string ToText() const;
};

// Lines are `key = value`; `#` starts a comment; blank lines are ignored.
// Unknown or repeated keys and malformed values are config errors naming the
// key and line.
ExperimentConfig ParseConfig(std::istream& in, const std::string& source = "<config>");
ExperimentConfig LoadConfigFile(const std::filesystem::path& path);

}  // namespace mistlab

#endif  // MISTLAB_CONFIG_H_
