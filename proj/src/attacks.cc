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

#include "mistlab/attacks.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "mistlab/error.h"
#include "mistlab/mlp.h"
#include "mistlab/rng.h"
#include "mistlab/training.h"

namespace mistlab {
namespace {

constexpr std::string_view kAttackMagic = "#mistlab-attack v1 name=";

AttackScores NewScores(const std::string& name, const EvalSet& eval) {
  AttackScores out;
  out.attack_name = name;
  out.ids = eval.data.ids();
  out.is_member = eval.is_member;
  out.labels = eval.data.labels();
  out.scores.assign(eval.data.size(), 0.0);
  out.fallback.assign(eval.data.size(), false);
  return out;
}

// v_0 + sum_i (v_i - v_0) / n; exact when all values are equal.
double StableMean(std::span<const double> v) {
  double shift = 0.0;
  for (double x : v.subspan(1)) shift += x - v[0];
  return v[0] + shift / static_cast<double>(v.size());
}

Matrix OneRow(std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  return m;
}

double ScoreAt(const Matrix& probs, std::size_t r, int label, ScoreKind kind) {
  auto p = probs.row(r);
  if (kind == ScoreKind::kLoss) return -std::log(std::max(p[label], kProbFloor));
  return LogitConfidence(p, label);
}

}  // namespace

EvalSet EvalSet::FromSplit(const LabeledDataset& all, const SplitSpec& split) {
  std::vector<std::pair<InstanceId, bool>> ids;
  for (InstanceId id : split.member_ids) ids.emplace_back(id, true);
  for (InstanceId id : split.nonmember_ids) ids.emplace_back(id, false);
  std::sort(ids.begin(), ids.end());
  std::vector<InstanceId> order;
  std::vector<bool> member;
  for (auto [id, m] : ids) {
    order.push_back(id);
    member.push_back(m);
  }
  return {all.WithIds(order), member};
}

void AttackScores::Validate() const {
  const std::size_t n = ids.size();
  if (scores.size() != n || is_member.size() != n ||
      (!labels.empty() && labels.size() != n) ||
      (!fallback.empty() && fallback.size() != n)) {
    throw DataError("attack '" + attack_name + "': score and truth key sets differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericError("attack '" + attack_name + "': non-finite score for id " +
                         std::to_string(ids[i]));
    }
  }
}

void WriteAttackScores(const AttackScores& scores, std::ostream& out) {
  scores.Validate();
  out << kAttackMagic << scores.attack_name << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < scores.ids.size(); ++i) {
    out << scores.ids[i] << '\t' << (scores.is_member[i] ? 1 : 0) << '\t'
        << scores.scores[i] << '\n';
  }
}

AttackScores ReadAttackScores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kAttackMagic, 0) != 0) {
    throw DataError("attack file: missing '#mistlab-attack v1' header");
  }
  AttackScores out;
  out.attack_name = line.substr(kAttackMagic.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string id, truth, score;
    if (!std::getline(cells, id, '\t') || !std::getline(cells, truth, '\t') ||
        !std::getline(cells, score, '\t')) {
      throw DataError("attack file line " + std::to_string(line_no) +
                      ": expected 3 tab-separated fields");
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(score.data(), score.data() + score.size(), v);
    if (ec != std::errc() || ptr != score.data() + score.size()) {
      throw DataError("attack file line " + std::to_string(line_no) + ": bad score");
    }
    out.ids.push_back(std::stoll(id));
    out.is_member.push_back(truth == "1");
    out.scores.push_back(v);
  }
  out.Validate();
  return out;
}

void WriteAttackScoresFile(const AttackScores& scores, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  WriteAttackScores(scores, out);
}

AttackScores ReadAttackScoresFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open attack file " + path.string());
  return ReadAttackScores(in);
}

double FeatureScale(const LabeledDataset& data) {
  const Matrix& x = data.features();
  const double n = static_cast<double>(x.rows());
  double total = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    total += std::sqrt(ss / n);
  }
  const double scale = total / static_cast<double>(x.cols());
  return scale > 0.0 ? scale : 1.0;
}

AttackScores LossAttack(const ModelParams& target, const EvalSet& eval,
                        double avg_train_loss) {
  if (!std::isfinite(avg_train_loss)) {
    throw ConfigError("average training loss must be finite");
  }
  AttackScores out = NewScores("loss", eval);
  const auto losses =
      PerExampleLoss(PredictBatch(target, eval.data.features()), eval.data.labels());
  for (std::size_t i = 0; i < losses.size(); ++i) out.scores[i] = -losses[i];
  std::ostringstream t;
  t << std::setprecision(17) << -avg_train_loss;
  out.metadata["threshold"] = t.str();
  return out;
}

double ModifiedEntropy(std::span<const double> probs, int label) {
  double m = -(1.0 - probs[label]) * std::log(std::max(probs[label], kProbFloor));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (static_cast<int>(i) == label) continue;
    m -= probs[i] * std::log(std::max(1.0 - probs[i], kProbFloor));
  }
  return m;
}

AttackScores MentrAttack(const ModelParams& target, const EvalSet& eval) {
  AttackScores out = NewScores("mentr", eval);
  Matrix probs = PredictBatch(target, eval.data.features());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    out.scores[i] = -ModifiedEntropy(probs.row(i), eval.data.labels()[i]);
  }
  out.metadata["threshold"] = "per-class";
  return out;
}

namespace {

std::vector<double> SortedDescending(std::span<const double> probs) {
  std::vector<double> v(probs.begin(), probs.end());
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

ModelParams TrainMembershipClassifier(std::span<const ShadowPrediction* const> rows,
                                      const ClassNnSpec& spec, std::uint64_t seed) {
  const std::size_t width = rows.front()->probs.size();
  Matrix x(rows.size(), width);
  std::vector<int> y(rows.size());
  std::vector<InstanceId> ids(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto sorted = SortedDescending(rows[i]->probs);
    std::copy(sorted.begin(), sorted.end(), x.row(i).begin());
    y[i] = rows[i]->in ? 1 : 0;
    ids[i] = static_cast<InstanceId>(i);
  }
  LabeledDataset data(std::move(x), std::move(y), std::move(ids), 2);
  MistConfig cfg;
  cfg.hidden = spec.hidden;
  cfg.epochs = spec.epochs;
  cfg.lr = spec.lr;
  cfg.batch_size = spec.batch_size;
  cfg.seed = seed;
  cfg.record_metrics = false;
  return BaselineTrain(data, nullptr, cfg).final_params;
}

}  // namespace

AttackScores ClassNnAttackFromPredictions(std::span<const ShadowPrediction> shadow_rows,
                                          const Matrix& target_probs,
                                          const EvalSet& eval, const ClassNnSpec& spec) {
  if (shadow_rows.empty()) throw DataError("Class-NN needs shadow predictions");
  if (target_probs.rows() != eval.data.size()) {
    throw ConfigError("target predictions must cover the evaluation set");
  }
  AttackScores out = NewScores("classnn", eval);
  const int classes = eval.data.num_classes();
  std::vector<std::vector<const ShadowPrediction*>> by_class(classes);
  std::vector<const ShadowPrediction*> all;
  for (const ShadowPrediction& r : shadow_rows) {
    if (r.label < 0 || r.label >= classes) throw DataError("shadow row label out of range");
    by_class[r.label].push_back(&r);
    all.push_back(&r);
  }
  auto usable = [&](const std::vector<const ShadowPrediction*>& rows) {
    if (rows.size() < spec.min_rows) return false;
    const auto in = std::count_if(rows.begin(), rows.end(),
                                  [](const ShadowPrediction* r) { return r->in; });
    return in > 0 && in < static_cast<std::ptrdiff_t>(rows.size());
  };
  std::vector<std::optional<ModelParams>> per_class(classes);
  std::optional<ModelParams> global;
  int skipped = 0;
  for (int k = 0; k < classes; ++k) {
    if (usable(by_class[k])) {
      per_class[k] = TrainMembershipClassifier(
          by_class[k], spec, DeriveSeed(spec.seed, {NameTag("classnn"), static_cast<std::uint64_t>(k)}));
    } else {
      ++skipped;
    }
  }
  if (skipped > 0) {
    global = TrainMembershipClassifier(all, spec,
                                       DeriveSeed(spec.seed, {NameTag("classnn-global")}));
  }
  for (std::size_t i = 0; i < eval.data.size(); ++i) {
    const int k = eval.data.labels()[i];
    const ModelParams& clf = per_class[k] ? *per_class[k] : *global;
    const auto sorted = SortedDescending(target_probs.row(i));
    out.scores[i] = Forward(clf, sorted).probs[1];
    out.fallback[i] = !per_class[k].has_value();
  }
  out.metadata["classes_on_fallback"] = std::to_string(skipped);
  return out;
}

AttackScores ClassNnAttack(const ShadowEnsemble& ensemble, const LabeledDataset& pool,
                           const ModelParams& target, const EvalSet& eval,
                           const ClassNnSpec& spec) {
  std::vector<ShadowPrediction> rows;
  rows.reserve(ensemble.models.size() * pool.size());
  for (std::size_t s = 0; s < ensemble.models.size(); ++s) {
    Matrix probs = PredictBatch(ensemble.models[s], pool.features());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      auto p = probs.row(i);
      rows.push_back({pool.labels()[i], std::vector<double>(p.begin(), p.end()),
                      ensemble.IsMember(static_cast<int>(s), pool.ids()[i])});
    }
  }
  return ClassNnAttackFromPredictions(rows, PredictBatch(target, eval.data.features()),
                                      eval, spec);
}

AttackScores PerturbAttack(const ModelParams& target, const EvalSet& eval,
                           const PerturbConfig& cfg, std::uint64_t seed) {
  if (!(cfg.sigma > 0.0)) throw ConfigError("perturbation sigma must be > 0");
  if (cfg.samples < 1) throw ConfigError("perturbation samples must be >= 1");
  AttackScores out = NewScores("perturb", eval);
  const std::size_t d = eval.data.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < eval.data.size(); ++i) {
    Rng rng(DeriveSeed(seed, {NameTag("perturb"),
                              static_cast<std::uint64_t>(eval.data.ids()[i])}));
    auto x = eval.data.features().row(i);
    const int y = eval.data.labels()[i];
    Matrix batch(cfg.samples + 1, d);
    std::copy(x.begin(), x.end(), batch.row(0).begin());
    for (int t = 1; t <= cfg.samples; ++t) {
      auto r = batch.row(t);
      for (std::size_t j = 0; j < d; ++j) r[j] = x[j] + cfg.sigma * normal(rng);
    }
    Matrix probs = PredictBatch(target, batch);
    const double base = -std::log(std::max(probs(0, y), kProbFloor));
    int higher = 0;
    for (int t = 1; t <= cfg.samples; ++t) {
      if (-std::log(std::max(probs(t, y), kProbFloor)) > base) ++higher;
    }
    out.scores[i] = static_cast<double>(higher) / cfg.samples;
  }
  return out;
}

double LiraLogRatio(double score, const GaussianPair& g) {
  const double zi = (score - g.mu_in) / g.sigma_in;
  const double zo = (score - g.mu_out) / g.sigma_out;
  return (-0.5 * zi * zi - std::log(g.sigma_in)) - (-0.5 * zo * zo - std::log(g.sigma_out));
}

AttackScores LiraAttack(const std::map<InstanceId, ShadowRecord>& records,
                        const ModelParams& target, const EvalSet& eval,
                        ScoreKind kind, double sigma_floor) {
  AttackScores out = NewScores("lira", eval);
  Matrix probs = PredictBatch(target, eval.data.features());
  for (std::size_t i = 0; i < eval.data.size(); ++i) {
    const InstanceId id = eval.data.ids()[i];
    auto it = records.find(id);
    if (it == records.end()) {
      throw DataError("LiRA: no shadow record for instance " + std::to_string(id));
    }
    const GaussianPair g = FitGaussians(it->second, sigma_floor);
    const double s = ScoreAt(probs, i, eval.data.labels()[i], kind);
    out.scores[i] = LiraLogRatio(s, g);
  }
  out.metadata["score_kind"] = std::string(ToString(kind));
  return out;
}

double CanaryObjective(std::span<const ModelParams> in_models,
                       std::span<const ModelParams> out_models,
                       std::span<const double> x, int label) {
  const Matrix row = OneRow(x);
  auto mean_loss = [&](std::span<const ModelParams> models) {
    double s = 0.0;
    for (const ModelParams& m : models) {
      s += -std::log(std::max(PredictBatch(m, row)(0, label), kProbFloor));
    }
    return s / static_cast<double>(models.size());
  };
  return mean_loss(out_models) - mean_loss(in_models);
}

AttackScores CanaryAttack(const ShadowEnsemble& ensemble, const ModelParams& target,
                          const EvalSet& eval, const CanaryConfig& cfg,
                          ScoreKind kind, std::uint64_t seed, double sigma_floor) {
  if (cfg.n_canaries < 1) throw ConfigError("canary.n must be >= 1");
  if (cfg.opt_steps < 0) throw ConfigError("canary.steps must be >= 0");
  if (cfg.step_size < 0.0 || cfg.init_noise < 0.0) {
    throw ConfigError("canary step size and noise must be >= 0");
  }
  AttackScores out = NewScores("canary", eval);
  const std::size_t d = eval.data.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  const int shadows = static_cast<int>(ensemble.models.size());
  std::size_t fallbacks = 0;

  for (std::size_t i = 0; i < eval.data.size(); ++i) {
    const InstanceId id = eval.data.ids()[i];
    const int y = eval.data.labels()[i];
    auto x = eval.data.features().row(i);
    std::vector<ModelParams> in_models, out_models;
    for (int s = 0; s < shadows; ++s) {
      (ensemble.IsMember(s, id) ? in_models : out_models).push_back(ensemble.models[s]);
    }
    if (in_models.size() < 2 || out_models.size() < 2) {
      // Not enough shadows on one side to fit a Gaussian: neutral score.
      out.scores[i] = 0.0;
      out.fallback[i] = true;
      ++fallbacks;
      continue;
    }
    const int canaries = cfg.n_canaries;
    const int steps = cfg.opt_steps;

    Matrix points(canaries, d);
    for (int c = 0; c < canaries; ++c) {
      Rng rng(DeriveSeed(seed, {NameTag("canary"), static_cast<std::uint64_t>(id),
                                static_cast<std::uint64_t>(c)}));
      auto r = points.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        r[j] = cfg.init_noise > 0.0 ? x[j] + cfg.init_noise * normal(rng) : x[j];
      }
    }

    // Guarded gradient ascent on J: a step is taken only when J does not
    // decrease, otherwise the step size for that canary is halved.
    std::vector<double> step(canaries, cfg.step_size);
    std::vector<int> labels(canaries, y);
    for (int t = 0; t < steps; ++t) {
      Matrix grad(canaries, d);
      std::vector<double> objective(canaries, 0.0);
      auto accumulate = [&](const std::vector<ModelParams>& models, double sign) {
        const double w = sign / static_cast<double>(models.size());
        for (const ModelParams& m : models) {
          Matrix g = LossInputGradient(m, points, labels);
          Matrix probs = PredictBatch(m, points);
          for (int c = 0; c < canaries; ++c) {
            objective[c] += w * -std::log(std::max(probs(c, y), kProbFloor));
            for (std::size_t j = 0; j < d; ++j) grad(c, j) += w * g(c, j);
          }
        }
      };
      accumulate(out_models, 1.0);
      accumulate(in_models, -1.0);
      for (int c = 0; c < canaries; ++c) {
        std::vector<double> proposal(d);
        for (std::size_t j = 0; j < d; ++j) proposal[j] = points(c, j) + step[c] * grad(c, j);
        const double next = CanaryObjective(in_models, out_models, proposal, y);
        if (next >= objective[c]) {
          std::copy(proposal.begin(), proposal.end(), points.row(c).begin());
        } else {
          step[c] *= 0.5;
        }
      }
    }

    std::vector<std::vector<double>> in_scores(canaries), out_scores(canaries);
    for (int s = 0; s < shadows; ++s) {
      Matrix probs = PredictBatch(ensemble.models[s], points);
      const bool member = ensemble.IsMember(s, id);
      for (int c = 0; c < canaries; ++c) {
        (member ? in_scores[c] : out_scores[c])
            .push_back(ScoreAt(probs, c, y, kind));
      }
    }
    Matrix target_probs = PredictBatch(target, points);
    std::vector<double> ratios(canaries);
    for (int c = 0; c < canaries; ++c) {
      const GaussianPair g = FitGaussians(in_scores[c], out_scores[c], sigma_floor);
      ratios[c] = LiraLogRatio(ScoreAt(target_probs, c, y, kind), g);
    }
    out.scores[i] = StableMean(ratios);
  }
  out.metadata["score_kind"] = std::string(ToString(kind));
  out.metadata["fallbacks"] = std::to_string(fallbacks);
  return out;
}

}  // namespace mistlab
