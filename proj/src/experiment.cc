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

#include "mistlab/experiment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mistlab/error.h"
#include "mistlab/mlp.h"
#include "mistlab/oracle.h"
#include "mistlab/rng.h"

namespace mistlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string Real(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

double AccuracyOn(const ModelParams& model, const LabeledDataset& data) {
  if (data.size() == 0) return kNaN;
  return Accuracy(PredictBatch(model, data.features()), data.labels());
}

double MeanLoss(const ModelParams& model, const LabeledDataset& data) {
  const auto losses = PerExampleLoss(PredictBatch(model, data.features()), data.labels());
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

std::filesystem::path ShadowPath(const std::filesystem::path& dir, int s) {
  std::ostringstream name;
  name << "shadow_" << std::setw(3) << std::setfill('0') << s << ".bin";
  return dir / "shadows" / name.str();
}

ShadowEnsemble LoadEnsemble(const std::filesystem::path& dir, bool need_models) {
  const auto scores_path = dir / "scores.tsv";
  if (!std::filesystem::exists(scores_path)) {
    throw ConfigError("missing " + scores_path.string() + "; run `shadow` first");
  }
  ShadowEnsemble ensemble;
  ensemble.scores = ReadScoresFile(scores_path);
  const int S = ensemble.scores.num_shadows;
  ensemble.members.assign(S, {});
  for (const ScoreRow& r : ensemble.scores.rows) {
    if (r.shadow_index < 0 || r.shadow_index >= S) {
      throw DataError("scores file: shadow index " + std::to_string(r.shadow_index) +
                      " out of range");
    }
    if (r.in) ensemble.members[r.shadow_index].push_back(r.instance_id);
  }
  for (auto& m : ensemble.members) std::sort(m.begin(), m.end());
  if (need_models) {
    for (int s = 0; s < S; ++s) {
      const auto path = ShadowPath(dir, s);
      if (!std::filesystem::exists(path)) {
        throw ConfigError("missing shadow snapshot " + path.string() + "; run `shadow` first");
      }
      ensemble.models.push_back(LoadSnapshotFile(path));
    }
  }
  return ensemble;
}

void WriteAttackOutputs(const std::filesystem::path& dir, const std::vector<AttackRun>& runs,
                        std::span<const double> fprs) {
  for (const AttackRun& r : runs) {
    WriteAttackScoresFile(r.scores, dir / ("attack_" + r.scores.attack_name + ".tsv"));
  }
  auto out = OpenOut(dir / "report.csv");
  out << MetricsReport::CsvHeader(fprs) << '\n';
  for (const AttackRun& r : runs) out << r.report.ToCsvRow() << '\n';
}

bool IsMist(Defense d) { return d == Defense::kMist || d == Defense::kMistMixup; }

}  // namespace

LabeledDataset LoadDataset(const DatasetConfig& cfg) {
  if (cfg.source == DatasetConfig::Source::kCsv) {
    CsvSchema schema;
    schema.label_column = cfg.label_column;
    schema.num_classes = cfg.classes;
    return LoadCsv(cfg.path, schema);
  }
  return GenerateSynthetic(cfg.synthetic);
}

ExperimentData PrepareData(const ExperimentConfig& cfg) {
  if (cfg.split.members == 0) throw ConfigError("split.members must be >= 1");
  if (cfg.split.members != cfg.split.nonmembers) {
    throw ConfigError("split.nonmembers must equal split.members (balanced evaluation)");
  }
  LabeledDataset all = LoadDataset(cfg.dataset);
  SplitSpec split = MakeSplit(all.ids(), cfg.split, cfg.seed);
  LabeledDataset train = all.WithIds(split.member_ids);
  LabeledDataset validation = all.WithIds(split.validation_ids);
  LabeledDataset test = all.WithIds(split.test_ids);
  LabeledDataset pool = all.WithIds(split.PoolIds());
  EvalSet eval = EvalSet::FromSplit(all, split);
  std::string name = cfg.dataset.source == DatasetConfig::Source::kCsv
                         ? cfg.dataset.path.stem().string()
                         : "synthetic";
  return {std::move(all),  std::move(split), std::move(train), std::move(validation),
          std::move(test), std::move(pool),  std::move(eval),  std::move(name)};
}

TargetRun TrainTarget(const ExperimentData& data, const MistConfig& recipe) {
  const LabeledDataset* validation = data.validation.size() ? &data.validation : nullptr;
  TargetRun run{recipe, TrainModel(data.train, validation, recipe)};
  const ModelParams& model = run.log.final_params;
  run.train_accuracy = AccuracyOn(model, data.train);
  run.validation_accuracy = AccuracyOn(model, data.validation);
  run.test_accuracy = AccuracyOn(model, data.test);
  run.mean_train_loss = MeanLoss(model, data.train);
  return run;
}

std::vector<SubmodelSweepRow> SweepSubmodels(const ExperimentData& data,
                                             const MistConfig& recipe, int c_min,
                                             int c_max) {
  if (c_min < 1 || c_max < c_min) {
    throw ConfigError("--sweep-C range must satisfy 1 <= a <= b");
  }
  if (data.validation.size() == 0) {
    throw ConfigError("split.validation must be > 0 to sweep C");
  }
  std::vector<SubmodelSweepRow> rows;
  for (int c = c_min; c <= c_max; ++c) {
    MistConfig cfg = recipe;
    cfg.submodels = c;
    if (c == 1) cfg.lambda = 0.0;
    rows.push_back({c, TrainTarget(data, cfg).validation_accuracy});
  }
  return rows;
}

int BestSubmodels(const std::vector<SubmodelSweepRow>& rows) {
  if (rows.empty()) throw ConfigError("empty C sweep");
  const auto best = std::max_element(rows.begin(), rows.end(),
                                     [](const SubmodelSweepRow& a, const SubmodelSweepRow& b) {
                                       return a.validation_accuracy < b.validation_accuracy;
                                     });
  return best->submodels;
}

LambdaTuning TuneLambda(const ExperimentData& data, const MistConfig& recipe,
                        const std::vector<double>& grid, double max_drop) {
  if (data.test.size() == 0) throw ConfigError("split.test must be > 0 to tune lambda");
  std::vector<double> lambdas = grid;
  lambdas.push_back(0.0);
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  LambdaTuning tuning;
  std::vector<TargetRun> runs;
  for (double lambda : lambdas) {
    MistConfig cfg = recipe;
    cfg.lambda = lambda;
    runs.push_back(TrainTarget(data, cfg));
  }
  tuning.reference_accuracy = runs.front().test_accuracy;
  std::size_t chosen = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const bool ok = tuning.reference_accuracy - runs[i].test_accuracy < max_drop;
    tuning.rows.push_back({lambdas[i], runs[i].test_accuracy, ok});
    if (ok) chosen = i;
  }
  tuning.selected = lambdas[chosen];
  tuning.selected_run = std::move(runs[chosen]);
  return tuning;
}

ShadowEnsemble RunShadows(const ExperimentData& data, const ExperimentConfig& cfg,
                          const MistConfig& recipe) {
  return TrainShadowEnsemble(data.pool, cfg.shadows, recipe,
                             DeriveSeed(cfg.seed, {NameTag("shadows")}), cfg.shadow_split,
                             cfg.threads);
}

EvalSet SubsampleEval(const EvalSet& eval, std::size_t limit, std::uint64_t seed) {
  if (limit == 0 || limit >= eval.data.size()) return eval;
  std::vector<std::size_t> members, nonmembers;
  for (std::size_t i = 0; i < eval.data.size(); ++i) {
    (eval.is_member[i] ? members : nonmembers).push_back(i);
  }
  Rng rng(seed);
  std::shuffle(members.begin(), members.end(), rng);
  std::shuffle(nonmembers.begin(), nonmembers.end(), rng);
  const std::size_t half = std::max<std::size_t>(1, limit / 2);
  members.resize(std::min(half, members.size()));
  nonmembers.resize(std::min(half, nonmembers.size()));
  std::vector<std::size_t> keep = members;
  keep.insert(keep.end(), nonmembers.begin(), nonmembers.end());
  std::sort(keep.begin(), keep.end());
  std::vector<bool> is_member;
  for (std::size_t i : keep) is_member.push_back(eval.is_member[i]);
  return {eval.data.Rows(keep), is_member};
}

std::vector<AttackRun> RunAttacks(const ExperimentConfig& cfg, const ExperimentData& data,
                                  const ModelParams& target, double mean_train_loss,
                                  const ShadowEnsemble* ensemble,
                                  const std::string& defense_label, std::ostream& log) {
  const double scale = FeatureScale(data.all);
  std::vector<AttackRun> runs;
  for (AttackKind kind : cfg.attacks) {
    const std::string name(ToString(kind));
    if (NeedsShadows(kind) && ensemble == nullptr) {
      throw ConfigError("attack '" + name + "' needs shadow models; run `shadow` first");
    }
    const std::uint64_t seed = DeriveSeed(cfg.seed, {NameTag("attack"), NameTag(name)});
    AttackScores scores;
    switch (kind) {
      case AttackKind::kLoss:
        scores = LossAttack(target, data.eval, mean_train_loss);
        break;
      case AttackKind::kMentr:
        scores = MentrAttack(target, data.eval);
        break;
      case AttackKind::kClassNn: {
        ClassNnSpec spec = cfg.classnn;
        spec.seed = seed;
        scores = ClassNnAttack(*ensemble, data.pool, target, data.eval, spec);
        break;
      }
      case AttackKind::kPerturb:
        scores = PerturbAttack(target, data.eval,
                               {cfg.perturb_sigma_scale * scale, cfg.perturb_samples}, seed);
        break;
      case AttackKind::kLira:
        scores = LiraAttack(CollectRecords(ensemble->scores, cfg.score_kind), target,
                            data.eval, cfg.score_kind);
        break;
      case AttackKind::kCanary: {
        if (cfg.dataset.strict_integer_features && data.all.HasBinaryFeatures()) {
          log << "canary: skipped, dataset has only binary features\n";
          continue;
        }
        const CanaryConfig canary{cfg.canary_count, cfg.canary_steps,
                                  cfg.canary_step_scale * scale,
                                  cfg.canary_noise_scale * scale};
        const EvalSet eval = SubsampleEval(data.eval, cfg.canary_eval_limit, seed);
        scores = CanaryAttack(*ensemble, target, eval, canary, cfg.score_kind, seed);
        break;
      }
    }
    MetricsReport report = Evaluate(scores, cfg.fpr_targets, data.name, defense_label);
    log << name << ": auc " << Real(report.auc);
    for (const PlrEntry& e : report.at) {
      log << "  plr@" << Real(e.fpr_target) << " " << Real(e.plr);
    }
    log << '\n';
    runs.push_back({std::move(scores), std::move(report)});
  }
  return runs;
}

std::filesystem::path ExperimentDir(const ExperimentConfig& cfg) {
  return cfg.output_dir / cfg.experiment;
}

void WriteTrainLog(const TrainLog& log, const std::filesystem::path& path) {
  auto out = OpenOut(path);
  out << "epoch,train_accuracy,validation_accuracy,ce_loss,xdiff_loss\n";
  for (const EpochStats& e : log.epochs) {
    out << e.epoch << ',' << Real(e.train_accuracy) << ',' << Real(e.validation_accuracy)
        << ',' << Real(e.ce_loss) << ',' << Real(e.xdiff_loss) << '\n';
  }
}

void CmdGenData(const ExperimentConfig& cfg, std::ostream& log) {
  const auto dir = ExperimentDir(cfg);
  std::filesystem::create_directories(dir);
  const LabeledDataset data = LoadDataset(cfg.dataset);
  WriteCsv(data, dir / "data.csv");
  log << "wrote " << (dir / "data.csv").string() << " (" << data.size() << " rows, "
      << data.dim() << " features, " << data.num_classes() << " classes)\n";
}

void CmdTrain(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  if ((opts.sweep_submodels || opts.tune_lambda) && !IsMist(cfg.defense)) {
    throw ConfigError("defense: --sweep-C and --tune-lambda need a mist defense");
  }
  const auto dir = ExperimentDir(cfg);
  std::filesystem::create_directories(dir);
  const ExperimentData data = PrepareData(cfg);
  ExperimentConfig effective = cfg;
  MistConfig recipe = cfg.TargetRecipe();

  if (opts.sweep_submodels) {
    const auto [a, b] = *opts.sweep_submodels;
    const auto rows = SweepSubmodels(data, recipe, std::max(a, 2), b);
    auto out = OpenOut(dir / "sweep_C.csv");
    out << "C,validation_accuracy\n";
    for (const auto& r : rows) out << r.submodels << ',' << Real(r.validation_accuracy) << '\n';
    recipe.submodels = BestSubmodels(rows);
    effective.recipe.submodels = recipe.submodels;
    log << "sweep-C: selected C = " << recipe.submodels << '\n';
  }

  std::optional<TargetRun> tuned;
  if (opts.tune_lambda) {
    LambdaTuning tuning = TuneLambda(data, recipe, cfg.lambda_grid, cfg.max_accuracy_drop);
    auto out = OpenOut(dir / "tune_lambda.csv");
    out << "lambda,test_accuracy,accuracy_drop,admissible\n";
    for (const auto& r : tuning.rows) {
      out << Real(r.lambda) << ',' << Real(r.test_accuracy) << ','
          << Real(tuning.reference_accuracy - r.test_accuracy) << ','
          << (r.admissible ? 1 : 0) << '\n';
    }
    effective.recipe.lambda = tuning.selected;
    log << "tune-lambda: selected lambda = " << Real(tuning.selected) << '\n';
    tuned = std::move(tuning.selected_run);
  }
  const TargetRun run = tuned ? std::move(*tuned) : TrainTarget(data, recipe);

  SaveSnapshotFile(run.log.final_params, dir / "snapshot.bin", opts.width);
  WriteTrainLog(run.log, dir / "trainlog.csv");
  auto eff = OpenOut(dir / "effective.cfg");
  eff << effective.ToText();
  log << "train accuracy " << Real(run.train_accuracy) << ", test accuracy "
      << Real(run.test_accuracy) << '\n';
}

void CmdShadow(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const auto dir = ExperimentDir(cfg);
  std::filesystem::create_directories(dir / "shadows");
  const ExperimentData data = PrepareData(cfg);
  const ShadowEnsemble ensemble = RunShadows(data, cfg, cfg.TargetRecipe());
  WriteScoresFile(ensemble.scores, dir / "scores.tsv");
  for (std::size_t s = 0; s < ensemble.models.size(); ++s) {
    SaveSnapshotFile(ensemble.models[s], ShadowPath(dir, static_cast<int>(s)), opts.width);
  }
  log << "wrote " << ensemble.scores.rows.size() << " shadow scores for "
      << ensemble.models.size() << " models\n";
}

void CmdAttack(const ExperimentConfig& cfg, std::ostream& log) {
  const auto dir = ExperimentDir(cfg);
  const auto snapshot = dir / "snapshot.bin";
  if (!std::filesystem::exists(snapshot)) {
    throw ConfigError("missing " + snapshot.string() + "; run `train` first");
  }
  const ExperimentData data = PrepareData(cfg);
  const ModelParams target = LoadSnapshotFile(snapshot);
  const bool need_shadows = std::any_of(cfg.attacks.begin(), cfg.attacks.end(), NeedsShadows);
  const bool need_models =
      std::any_of(cfg.attacks.begin(), cfg.attacks.end(), [](AttackKind a) {
        return a == AttackKind::kClassNn || a == AttackKind::kCanary;
      });
  std::optional<ShadowEnsemble> ensemble;
  if (need_shadows) ensemble = LoadEnsemble(dir, need_models);
  const auto runs = RunAttacks(cfg, data, target, MeanLoss(target, data.train),
                               ensemble ? &*ensemble : nullptr,
                               std::string(ToString(cfg.defense)), log);
  WriteAttackOutputs(dir, runs, cfg.fpr_targets);
}

void CmdAblate(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.recipe.submodels < 2) throw ConfigError("mist.C must be >= 2 for the ablation");
  const auto dir = ExperimentDir(cfg);
  std::filesystem::create_directories(dir);
  const ExperimentData data = PrepareData(cfg);
  ExperimentConfig lira_only = cfg;
  lira_only.attacks = {AttackKind::kLira};

  struct Arm {
    std::string name;
    MistConfig recipe;
    TargetRun run;
    MetricsReport report;
  };
  auto evaluate = [&](const std::string& name, const MistConfig& recipe) {
    log << "ablate: " << name << '\n';
    Arm arm{name, recipe, TrainTarget(data, recipe), {}};
    const ShadowEnsemble ensemble = RunShadows(data, cfg, recipe);
    auto runs = RunAttacks(lira_only, data, arm.run.log.final_params,
                           arm.run.mean_train_loss, &ensemble, name, log);
    arm.report = std::move(runs.front().report);
    return arm;
  };

  MistConfig none = cfg.RecipeFor(Defense::kNone);
  MistConfig phase1 = cfg.RecipeFor(Defense::kMist);
  phase1.lambda = 0.0;
  const Arm none_arm = evaluate("no-defense", none);
  const Arm phase1_arm = evaluate("phase1-only", phase1);

  auto out = OpenOut(dir / "ablation.csv");
  out << "arm,variant,C,lambda,train_accuracy,test_accuracy,"
      << MetricsReport::CsvHeader(cfg.fpr_targets) << '\n';
  auto row = [&](const Arm& arm, XdiffVariant variant) {
    out << arm.name << ',' << ToString(variant) << ',' << arm.recipe.submodels << ','
        << Real(arm.recipe.lambda) << ',' << Real(arm.run.train_accuracy) << ','
        << Real(arm.run.test_accuracy) << ',' << arm.report.ToCsvRow() << '\n';
  };
  for (XdiffVariant variant : cfg.ablate_variants) {
    MistConfig full = cfg.RecipeFor(Defense::kMist);
    full.variant = variant;
    if (!(full.lambda > 0.0)) throw ConfigError("mist.lambda must be > 0 for the ablation");
    const Arm full_arm = evaluate("phase1+2", full);
    row(none_arm, variant);
    row(phase1_arm, variant);
    row(full_arm, variant);
  }
}

void CmdOracle(const ExperimentConfig& cfg, std::ostream& log) {
  const auto dir = ExperimentDir(cfg);
  std::filesystem::create_directories(dir);
  const LabeledDataset data = LoadDataset(cfg.dataset);
  auto detail = OpenOut(dir / "oracle.csv");
  auto summary = OpenOut(dir / "oracle_summary.csv");
  detail << "lambda,removed_id,sup_gap\n";
  summary << "lambda,mean_gap,distinct_instances\n";
  for (double lambda : cfg.oracle_lambdas) {
    MistConfig recipe = cfg.RecipeFor(Defense::kMist);
    recipe.lambda = lambda;
    LooOracleConfig oracle;
    oracle.removals = cfg.oracle_removals;
    oracle.seed = DeriveSeed(cfg.seed, {NameTag("oracle")});
    const LooReport report = LooInvarianceOracle(data, recipe, nullptr, oracle);
    for (const LooRemoval& r : report.removals) {
      detail << Real(lambda) << ',' << r.removed << ',' << std::setprecision(17)
             << r.sup_gap << '\n';
    }
    summary << Real(lambda) << ',' << std::setprecision(17) << report.mean_gap << ','
            << report.distinct_instances << '\n';
    log << "oracle: lambda " << Real(lambda) << " mean gap " << Real(report.mean_gap) << '\n';
  }
}

void MergeReports(const std::vector<std::filesystem::path>& inputs,
                  const std::filesystem::path& output) {
  if (inputs.empty()) throw ConfigError("report: no input CSV files");
  std::string header;
  std::vector<std::string> lines;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report " + path.string());
    std::string first;
    if (!std::getline(in, first)) throw DataError(path.string() + ": empty report");
    if (header.empty()) {
      header = first;
    } else if (first != header) {
      throw DataError(path.string() + ": header differs from " + inputs.front().string());
    }
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) lines.push_back(line);
    }
  }
  if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
  auto out = OpenOut(output);
  out << header << '\n';
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace mistlab
