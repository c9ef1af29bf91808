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

// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails. `acceptance 8 9` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mistlab/attacks.h"
#include "mistlab/config.h"
#include "mistlab/experiment.h"
#include "mistlab/metrics.h"
#include "mistlab/oracle.h"
#include "mistlab/snapshot.h"
#include "mistlab/training.h"
#include "test_util.h"

namespace mistlab {
namespace {

namespace fs = std::filesystem;
using testing::NumericGradient;
using testing::RandomLabels;
using testing::RandomMatrix;
using testing::RandomModel;
using testing::RelativeError;

const fs::path kConfigDir = fs::path(MISTLAB_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string Fmt(double v, int digits = 4) {
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

ModelParams PeerLike(const ModelParams& like, Rng& rng) {
  const ModelParams base = ModelParams::GlorotUniform(like.layer_dims(), rng());
  std::vector<double> v(base.values().begin(), base.values().end());
  std::normal_distribution<double> noise(0.0, 0.1);
  for (double& x : v) x += noise(rng);
  return ModelParams(like.layer_dims(), std::move(v));
}

Outcome GradientFidelity() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  int nets = 0;
  while (nets < 20) {
    const ModelParams w = RandomModel(rng);
    const Matrix x = RandomMatrix(6, w.input_dim(), rng);
    const auto y = RandomLabels(6, w.num_classes(), rng);
    std::vector<ModelParams> peers;
    for (int i = 0; i < 3; ++i) peers.push_back(PeerLike(w, rng));
    const Matrix mean = PeerMeanPredictions(peers, x);
    const Matrix probs = PredictBatch(w, x);
    bool near_kink = false;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      near_kink |= std::abs(probs(r, y[r]) - mean(r, y[r])) < 1e-3;
    }
    if (near_kink) continue;
    out.Require(w.size() <= 5000, "model larger than 5,000 parameters");
    const auto ce = NumericGradient(
        w, [&](const ModelParams& q) { return CrossEntropyLossAndGrad(q, x, y).loss; });
    worst = std::max(worst, RelativeError(CrossEntropyLossAndGrad(w, x, y).grad.values, ce));
    for (XdiffVariant v : {XdiffVariant::kL1, XdiffVariant::kL2, XdiffVariant::kKL}) {
      const auto numeric = NumericGradient(w, [&](const ModelParams& q) {
        return XdiffLossAndGradWithTargets(q, x, y, mean, v).loss;
      });
      worst = std::max(worst, RelativeError(XdiffLossAndGrad(w, x, y, peers, v).grad.values,
                                            numeric));
    }
    ++nets;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.Require(worst < 1e-4, "relative error " + Fmt(worst));
  out.Require(seconds < 60.0, "took " + Fmt(seconds) + " s");
  if (out.pass) out.detail = "worst relative error " + Fmt(worst, 3) + " in " + Fmt(seconds, 2) + " s";
  return out;
}

Outcome DegenerateReduction() {
  Outcome out;
  for (std::uint64_t seed : {1, 2, 3}) {
    const LabeledDataset data = GenerateSynthetic({5, 6, 30, 1.5, 1.0, seed});
    MistConfig cfg;
    cfg.hidden = {16};
    cfg.epochs = 1;
    cfg.batch_size = 16;
    cfg.seed = seed;
    // Compare the whole trajectory by checking every prefix of epochs.
    for (int epochs = 1; epochs <= 8; ++epochs) {
      cfg.epochs = epochs;
      const TrainLog mist = MistTrain(data, nullptr, cfg);
      const TrainLog base = BaselineTrain(data, nullptr, cfg);
      out.Require(mist.final_params == base.final_params,
                  "seed " + std::to_string(seed) + " diverges at epoch " + std::to_string(epochs));
    }
  }
  if (out.pass) out.detail = "bitwise equal after every epoch, 3 seeds";
  return out;
}

Outcome ZeroCase() {
  Outcome out;
  Rng rng(303);
  double kl_worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams w = RandomModel(rng);
    const std::vector<ModelParams> peers(3, w);
    const Matrix x = RandomMatrix(8, w.input_dim(), rng);
    const auto y = RandomLabels(8, w.num_classes(), rng);
    for (XdiffVariant v : {XdiffVariant::kL1, XdiffVariant::kL2}) {
      const LossAndGrad lg = XdiffLossAndGrad(w, x, y, peers, v);
      out.Require(lg.loss == 0.0, std::string(ToString(v)) + " loss nonzero");
      for (double g : lg.grad.values) {
        out.Require(g == 0.0, std::string(ToString(v)) + " gradient nonzero");
      }
    }
    const LossAndGrad kl = XdiffLossAndGrad(w, x, y, peers, XdiffVariant::kKL);
    kl_worst = std::max(kl_worst, std::abs(kl.loss));
    for (double g : kl.grad.values) kl_worst = std::max(kl_worst, std::abs(g));
  }
  out.Require(kl_worst <= 1e-12, "KL residual " + Fmt(kl_worst));
  if (out.pass) out.detail = "L1/L2 exactly 0, KL max residual " + Fmt(kl_worst, 3);
  return out;
}

Outcome AggregationAndPartition() {
  Outcome out;
  Rng rng(404);
  std::uniform_int_distribution<int> n_dist(1, 500), c_dist(1, 12);
  for (int epoch = 0; epoch < 100; ++epoch) {
    const int n = n_dist(rng);
    const int c = std::min(c_dist(rng), n);
    std::vector<InstanceId> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = static_cast<InstanceId>(rng() >> 1);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const PartitionPlan plan = Partition(ids, std::min<int>(c, ids.size()), rng());
    std::multiset<InstanceId> seen;
    std::size_t smallest = ids.size(), largest = 0;
    for (const auto& subset : plan.subsets) {
      seen.insert(subset.begin(), subset.end());
      smallest = std::min(smallest, subset.size());
      largest = std::max(largest, subset.size());
    }
    out.Require(seen == std::multiset<InstanceId>(ids.begin(), ids.end()),
                "partition not disjoint/covering");
    out.Require(largest - smallest <= 1, "subset sizes differ by more than one");
  }
  // Fixed-order mean on random models and on real MIST runs.
  auto manual_mean = [](std::span<const ModelParams> models) {
    std::vector<double> v(models[0].size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double s = 0.0;
      for (const ModelParams& m : models) s += m.values()[i];
      v[i] = s / static_cast<double>(models.size());
    }
    return ModelParams(models[0].layer_dims(), std::move(v));
  };
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams first = RandomModel(rng);
    std::vector<ModelParams> models = {first};
    for (int c = 1 + trial % 8; c > 0; --c) models.push_back(PeerLike(first, rng));
    out.Require(AverageParams(models) == manual_mean(models), "AverageParams differs");
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    MistConfig cfg;
    cfg.hidden = {8};
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.submodels = 2 + static_cast<int>(seed % 4);
    cfg.lambda = 2.0;
    cfg.seed = seed;
    const TrainLog log = MistTrain(GenerateSynthetic({3, 5, 12, 1.0, 1.0, seed}), nullptr, cfg);
    out.Require(log.final_params == manual_mean(log.final_submodels),
                "MIST aggregate differs from the fixed-order mean");
  }
  if (out.pass) out.detail = "100 partitions, 100 averages, 10 training runs";
  return out;
}

double PairCountingAuc(const std::vector<double>& s, const std::vector<bool>& m) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!m[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (m[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

Outcome MetricsOracle() {
  Outcome out;
  Rng rng(505);
  std::uniform_int_distribution<std::size_t> size(2, 200);
  std::uniform_int_distribution<int> coarse(0, 6);
  std::normal_distribution<double> fine(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    std::vector<double> s(n);
    std::vector<bool> m(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = i == 0 || (i > 1 && coin(rng));
      s[i] = trial % 2 ? coarse(rng) + (m[i] ? 1.0 : 0.0) : fine(rng) + (m[i] ? 0.5 : 0.0);
    }
    const RocCurve curve = Roc(s, m);
    out.Require(Auc(curve) == PairCountingAuc(s, m), "AUC mismatch in set " + std::to_string(trial));
    const double pos = static_cast<double>(curve.positives);
    const double neg = static_cast<double>(curve.negatives);
    for (double target : {0.001, 0.01, 0.1, 0.5}) {
      double best = 0.0;
      for (double t : s) {
        double tp = 0, fp = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (s[i] >= t) (m[i] ? tp : fp) += 1;
        }
        if (fp / neg <= target) best = std::max(best, tp / pos);
      }
      out.Require(TprAtFprTarget(curve, target).tpr == best,
                  "TPR mismatch in set " + std::to_string(trial));
    }
  }
  if (out.pass) out.detail = "1000 sets, exact";
  return out;
}

Outcome LiraSanity() {
  Outcome out;
  // Per instance: 50 IN and 50 OUT shadow scores from the true Gaussians, a fit,
  // then the target score from the side matching membership.
  auto run = [](double mu_in, double mu_out, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> in(mu_in, sigma), out(mu_out, sigma);
    std::vector<double> scores;
    std::vector<bool> member;
    for (int i = 0; i < 2000; ++i) {
      std::vector<double> in_s(50), out_s(50);
      for (double& v : in_s) v = in(rng);
      for (double& v : out_s) v = out(rng);
      const GaussianPair g = FitGaussians(in_s, out_s);
      const bool m = i % 2 == 0;
      scores.push_back(LiraLogRatio(m ? in(rng) : out(rng), g));
      member.push_back(m);
    }
    return Auc(Roc(scores, member));
  };
  const double same = run(0.0, 0.0, 1.0, 606);
  const double apart = run(4.0, 0.0, 1.0, 607);
  const double worked = LiraLogRatio(0.0, {0.0, 1.0, 2.0, 1.0});
  out.Require(std::abs(same - 0.5) <= 0.05, "identical Gaussians AUC " + Fmt(same));
  out.Require(apart >= 0.99, "separated Gaussians AUC " + Fmt(apart));
  out.Require(std::abs(worked - 2.0) <= 1e-9, "log ratio " + Fmt(worked, 17));
  if (out.pass) {
    out.detail = "AUC " + Fmt(same) + " (identical), " + Fmt(apart) + " (4 sigma), log ratio " +
                 Fmt(worked, 17);
  }
  return out;
}

Outcome NonOverlapClosedForm() {
  Outcome out;
  const double got = NonOverlap({0.0, 1.0, 2.0, 1.0});
  const double want = 1.0 - 2.0 * NormalCdf(-1.0);
  out.Require(std::abs(got - want) <= 1e-6, Fmt(got, 10) + " vs " + Fmt(want, 10));
  if (out.pass) out.detail = Fmt(got, 10) + " vs closed form " + Fmt(want, 10);
  return out;
}

struct ArmResult {
  double test_accuracy = 0.0;
  double lambda = 0.0;
  double auc = 0.0;
  double plr = 0.0;
};

struct BenchmarkSeed {
  ArmResult none, phase1, mist;
};

std::map<std::uint64_t, BenchmarkSeed> benchmark_cache;

ArmResult Attack(const ExperimentConfig& cfg, const ExperimentData& data, const TargetRun& run,
                 const std::string& label) {
  const ShadowEnsemble shadows = RunShadows(data, cfg, run.recipe);
  std::ostringstream sink;
  const auto attacks =
      RunAttacks(cfg, data, run.log.final_params, run.mean_train_loss, &shadows, label, sink);
  ArmResult r;
  r.test_accuracy = run.test_accuracy;
  r.lambda = run.recipe.lambda;
  r.auc = attacks.front().report.auc;
  r.plr = attacks.front().report.At(0.01).plr;
  std::cerr << "  " << label << ": lambda " << r.lambda << " test acc " << Fmt(r.test_accuracy)
            << " LiRA AUC " << Fmt(r.auc) << " PLR@1% " << Fmt(r.plr) << '\n';
  return r;
}

const BenchmarkSeed& Benchmark(std::uint64_t seed) {
  auto it = benchmark_cache.find(seed);
  if (it != benchmark_cache.end()) return it->second;
  ExperimentConfig cfg = LoadConfigFile(kConfigDir / "benchmark.cfg");
  cfg.seed = seed;
  cfg.dataset.synthetic.seed = seed;
  cfg.attacks = {AttackKind::kLira};
  cfg.fpr_targets = {0.01};
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  std::cerr << "benchmark seed " << seed << '\n';
  const ExperimentData data = PrepareData(cfg);
  BenchmarkSeed b;
  b.none = Attack(cfg, data, TrainTarget(data, cfg.RecipeFor(Defense::kNone)), "none");
  MistConfig phase1 = cfg.RecipeFor(Defense::kMist);
  phase1.lambda = 0.0;
  b.phase1 = Attack(cfg, data, TrainTarget(data, phase1), "phase1-only");
  LambdaTuning tuning =
      TuneLambda(data, cfg.RecipeFor(Defense::kMist), cfg.lambda_grid, cfg.max_accuracy_drop);
  b.mist = Attack(cfg, data, *tuning.selected_run, "mist");
  return benchmark_cache.emplace(seed, b).first->second;
}

Outcome DirectionalDefense() {
  Outcome out;
  std::vector<double> none_plr, mist_plr;
  double worst_drop = -1.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const BenchmarkSeed& b = Benchmark(seed);
    none_plr.push_back(b.none.plr);
    mist_plr.push_back(b.mist.plr);
    worst_drop = std::max(worst_drop, b.none.test_accuracy - b.mist.test_accuracy);
  }
  const double none = Median(none_plr), mist = Median(mist_plr);
  out.Require(mist <= 0.5 * none, "median PLR@1% " + Fmt(mist) + " vs no defense " + Fmt(none));
  out.Require(worst_drop <= 0.03, "test accuracy drop " + Fmt(worst_drop));
  out.detail = "median PLR@1% " + Fmt(mist) + " vs " + Fmt(none) + " (ratio " +
               Fmt(mist / none, 3) + "), worst accuracy drop " + Fmt(100 * worst_drop, 3) +
               " points" + (out.pass ? "" : "; " + out.detail);
  return out;
}

Outcome AblationOrdering() {
  Outcome out;
  int holds = 0;
  std::string aucs;
  for (std::uint64_t seed : {1, 2, 3}) {
    const BenchmarkSeed& b = Benchmark(seed);
    holds += b.mist.auc <= b.phase1.auc && b.phase1.auc <= b.none.auc;
    aucs += (aucs.empty() ? "" : "; ") + Fmt(b.mist.auc, 3) + " <= " + Fmt(b.phase1.auc, 3) +
            " <= " + Fmt(b.none.auc, 3);
  }
  out.Require(holds >= 2, "ordering held in " + std::to_string(holds) + " of 3 seeds");
  out.detail = std::to_string(holds) + "/3 seeds (" + aucs + ")";
  return out;
}

Outcome LeaveOneOut() {
  Outcome out;
  int wins = 0;
  std::string gaps;
  for (std::uint64_t seed : {1, 2, 3}) {
    ExperimentConfig cfg = LoadConfigFile(kConfigDir / "oracle.cfg");
    cfg.seed = seed;
    cfg.dataset.synthetic.seed = seed;
    const LabeledDataset data = LoadDataset(cfg.dataset);
    out.Require(data.size() == 64, "micro set has " + std::to_string(data.size()) + " rows");
    LooOracleConfig oracle;
    oracle.removals = 8;
    oracle.seed = DeriveSeed(seed, {NameTag("oracle")});
    MistConfig recipe = cfg.RecipeFor(Defense::kMist);
    recipe.lambda = 0.0;
    const double plain = LooInvarianceOracle(data, recipe, nullptr, oracle).mean_gap;
    recipe.lambda = 8.0;
    const double defended = LooInvarianceOracle(data, recipe, nullptr, oracle).mean_gap;
    wins += defended < plain;
    gaps += (gaps.empty() ? "" : "; ") + Fmt(defended, 3) + " vs " + Fmt(plain, 3);

    // Append a copy of the first row and remove it again.
    const std::size_t n = data.size();
    Matrix features(n + 1, data.dim());
    std::vector<int> labels(data.labels());
    std::vector<InstanceId> ids(data.ids());
    for (std::size_t i = 0; i < n; ++i) {
      std::ranges::copy(data.features().row(i), features.row(i).begin());
    }
    std::ranges::copy(data.features().row(0), features.row(n).begin());
    labels.push_back(data.labels()[0]);
    const InstanceId copy = *std::max_element(ids.begin(), ids.end()) + 1;
    ids.push_back(copy);
    const LabeledDataset with_copy(std::move(features), std::move(labels), std::move(ids),
                                   data.num_classes());
    LooOracleConfig dup;
    dup.removal_ids = {copy};
    const double gap = LooInvarianceOracle(with_copy, recipe, nullptr, dup).removals[0].sup_gap;
    out.Require(gap <= 1e-6, "duplicate removal gap " + Fmt(gap));
  }
  out.Require(wins >= 2, "lambda 8 smaller in " + std::to_string(wins) + " of 3 seeds");
  out.detail = std::to_string(wins) + "/3 seeds, mean gap lambda 8 vs 0: " + gaps +
               (out.pass ? "; duplicate removal gap <= 1e-6" : "; " + out.detail);
  return out;
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = bytes.str();
  }
  return files;
}

void RunAllCommands(ExperimentConfig cfg, const fs::path& out, int threads) {
  cfg.output_dir = out;
  cfg.threads = threads;
  std::ostringstream sink;
  CommandOptions opts;
  CmdGenData(cfg, sink);
  CmdTrain(cfg, opts, sink);
  CmdShadow(cfg, opts, sink);
  CmdAttack(cfg, sink);
  CmdAblate(cfg, sink);
  CmdOracle(cfg, sink);
  // Sweep, tuning and a full-width snapshot under a second experiment name.
  opts.sweep_submodels = std::pair{2, 3};
  opts.tune_lambda = true;
  opts.width = SnapshotWidth::kF64;
  cfg.experiment += "_tuned";
  CmdTrain(cfg, opts, sink);
}

Outcome Determinism() {
  Outcome out;
  ExperimentConfig cfg = LoadConfigFile(kConfigDir / "smoke.cfg");
  cfg.oracle_removals = 3;
  const fs::path root = fs::temp_directory_path() / "mistlab_acceptance";
  fs::remove_all(root);
  RunAllCommands(cfg, root / "a", 1);
  RunAllCommands(cfg, root / "b", 1);
  RunAllCommands(cfg, root / "c", 4);
  // effective.cfg records the output directory and thread count; blank those.
  auto read = [&](const char* name) {
    auto files = ReadTree(root / name);
    for (auto& [file, bytes] : files) {
      if (!file.ends_with("effective.cfg")) continue;
      std::istringstream lines(bytes);
      std::string kept, line;
      while (std::getline(lines, line)) {
        if (!line.starts_with("output_dir =") && !line.starts_with("threads =")) {
          kept += line + '\n';
        }
      }
      bytes = kept;
    }
    return files;
  };
  const auto a = read("a"), b = read("b"), c = read("c");
  out.Require(a.size() >= 20, "only " + std::to_string(a.size()) + " output files");
  out.Require(a == b, "repeated --threads 1 runs differ");
  out.Require(a == c, "parallel run differs from single-threaded run");

  const fs::path dir = root / "a" / "smoke";
  const std::string snapshot = a.at("smoke/snapshot.bin");
  std::ostringstream resaved;
  SaveSnapshot(LoadSnapshotFile(dir / "snapshot.bin"), resaved, SnapshotWidth::kF32);
  out.Require(resaved.str() == snapshot, "f32 snapshot does not round-trip");
  const TrainLog trained = MistTrain(GenerateSynthetic({3, 4, 10, 1.0, 1.0, 1}), nullptr,
                                     cfg.RecipeFor(Defense::kMist));
  std::stringstream wide;
  SaveSnapshot(trained.final_params, wide, SnapshotWidth::kF64);
  out.Require(LoadSnapshot(wide) == trained.final_params, "f64 snapshot not exact");
  std::ostringstream scores;
  WriteScores(ReadScoresFile(dir / "scores.tsv"), scores);
  out.Require(scores.str() == a.at("smoke/scores.tsv"), "scores file does not round-trip");
  if (out.pass) {
    out.detail = std::to_string(a.size()) +
                 " files byte-identical across reruns and 1 vs 4 threads; snapshot and "
                 "scores round-trip";
  }
  return out;
}

struct Criterion {
  int number;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace mistlab

int main(int argc, char** argv) {
  using namespace mistlab;
  const std::vector<Criterion> all = {
      {1, "gradient fidelity", GradientFidelity},
      {2, "degenerate reduction", DegenerateReduction},
      {3, "identical peers zero case", ZeroCase},
      {4, "aggregation and partition", AggregationAndPartition},
      {5, "metrics oracle", MetricsOracle},
      {6, "LiRA sanity", LiraSanity},
      {7, "non-overlap closed form", NonOverlapClosedForm},
      {8, "directional defense", DirectionalDefense},
      {9, "ablation ordering", AblationOrdering},
      {10, "leave-one-out oracle", LeaveOneOut},
      {11, "determinism and round-trips", Determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.contains(c.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << c.number << " (" << c.name << "): "
              << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  [" << Fmt(seconds, 3)
              << " s]" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
