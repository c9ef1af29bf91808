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

#ifndef MISTLAB_EXPERIMENT_H_
#define MISTLAB_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mistlab/attacks.h"
#include "mistlab/config.h"
#include "mistlab/metrics.h"
#include "mistlab/shadow.h"
#include "mistlab/snapshot.h"
#include "mistlab/training.h"

namespace mistlab {

// The dataset and its target splits. `pool` (members + nonmembers) is what
// shadow models draw their training sets from and what attacks evaluate.
struct ExperimentData {
  LabeledDataset all;
  SplitSpec split;
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
  LabeledDataset pool;
  EvalSet eval;
  std::string name;  // dataset label for reports
};

LabeledDataset LoadDataset(const DatasetConfig& cfg);
ExperimentData PrepareData(const ExperimentConfig& cfg);

struct TargetRun {
  MistConfig recipe;
  TrainLog log;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;  // NaN without a validation split
  double test_accuracy = 0.0;        // NaN without a test split
  double mean_train_loss = 0.0;
};

TargetRun TrainTarget(const ExperimentData& data, const MistConfig& recipe);

struct SubmodelSweepRow {
  int submodels = 0;
  double validation_accuracy = 0.0;
};

// Validation accuracy for each C in [c_min, c_max]; the recipe's lambda is
// kept. The best C is the first with the highest accuracy.
std::vector<SubmodelSweepRow> SweepSubmodels(const ExperimentData& data,
                                             const MistConfig& recipe, int c_min,
                                             int c_max);
int BestSubmodels(const std::vector<SubmodelSweepRow>& rows);

struct LambdaTuningRow {
  double lambda = 0.0;
  double test_accuracy = 0.0;
  bool admissible = false;
};

struct LambdaTuning {
  double reference_accuracy = 0.0;  // test accuracy at lambda = 0
  std::vector<LambdaTuningRow> rows;
  double selected = 0.0;
  std::optional<TargetRun> selected_run;
};

// Trains every lambda in `grid` (plus 0 as the reference) and selects the
// largest one whose test-accuracy drop against lambda = 0 is below
// `max_drop`.
LambdaTuning TuneLambda(const ExperimentData& data, const MistConfig& recipe,
                        const std::vector<double>& grid, double max_drop);

// Shadow ensemble trained with the target recipe on halves of the pool.
ShadowEnsemble RunShadows(const ExperimentData& data, const ExperimentConfig& cfg,
                          const MistConfig& recipe);

struct AttackRun {
  AttackScores scores;
  MetricsReport report;
};

// Runs each configured attack. Shadow-calibrated attacks require `ensemble`.
std::vector<AttackRun> RunAttacks(const ExperimentConfig& cfg, const ExperimentData& data,
                                  const ModelParams& target, double mean_train_loss,
                                  const ShadowEnsemble* ensemble,
                                  const std::string& defense_label, std::ostream& log);

// Balanced subsample of at most `limit` instances (half members); the whole
// set when limit is 0 or not smaller than the set.
EvalSet SubsampleEval(const EvalSet& eval, std::size_t limit, std::uint64_t seed);

struct CommandOptions {
  SnapshotWidth width = SnapshotWidth::kF32;
  std::optional<std::pair<int, int>> sweep_submodels;
  bool tune_lambda = false;
};

std::filesystem::path ExperimentDir(const ExperimentConfig& cfg);

// Each command writes under ExperimentDir(cfg) and overwrites its outputs.
void CmdGenData(const ExperimentConfig& cfg, std::ostream& log);
void CmdTrain(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log);
void CmdShadow(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log);
void CmdAttack(const ExperimentConfig& cfg, std::ostream& log);
void CmdAblate(const ExperimentConfig& cfg, std::ostream& log);
void CmdOracle(const ExperimentConfig& cfg, std::ostream& log);
// Concatenates CSV files that share a header.
void MergeReports(const std::vector<std::filesystem::path>& inputs,
                  const std::filesystem::path& output);

void WriteTrainLog(const TrainLog& log, const std::filesystem::path& path);

}  // namespace mistlab

#endif  // MISTLAB_EXPERIMENT_H_
