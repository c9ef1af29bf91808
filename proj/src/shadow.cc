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

#include "mistlab/shadow.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <iomanip>
#include <sstream>
#include <string>

#include "mistlab/error.h"
#include "mistlab/mlp.h"
#include "mistlab/parallel.h"
#include "mistlab/rng.h"

namespace mistlab {
namespace {

constexpr std::string_view kScoresMagic = "#mistlab-scores v1";

double ParseReal(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw DataError("scores file line " + std::to_string(line_no) +
                    ": bad number '" + cell + "'");
  }
  return v;
}

double SampleStddev(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double Mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

std::string_view ToString(ScoreKind kind) {
  return kind == ScoreKind::kLoss ? "loss" : "logit";
}

ScoreKind ParseScoreKind(std::string_view name) {
  if (name == "loss") return ScoreKind::kLoss;
  if (name == "logit" || name == "logit_confidence") return ScoreKind::kLogitConfidence;
  throw ConfigError("unknown score kind '" + std::string(name) +
                    "' (expected loss or logit)");
}

double LogitConfidence(std::span<const double> probs, int label) {
  double others = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (static_cast<int>(k) != label) others += probs[k];
  }
  const double p = std::clamp(probs[label], kProbFloor, 1.0);
  return std::log(p) - std::log(std::clamp(others, kProbFloor, 1.0));
}

void WriteScores(const ShadowScores& scores, std::ostream& out) {
  out << kScoresMagic << " S=" << scores.num_shadows << " kind=both\n";
  out << std::setprecision(17);
  for (const ScoreRow& r : scores.rows) {
    out << r.instance_id << '\t' << r.shadow_index << '\t' << (r.in ? 1 : 0) << '\t'
        << r.loss << '\t' << r.logit_confidence << '\n';
  }
}

ShadowScores ReadScores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kScoresMagic, 0) != 0) {
    throw DataError("scores file: missing '#mistlab-scores v1' header");
  }
  ShadowScores scores;
  const auto s_pos = line.find(" S=");
  if (s_pos == std::string::npos) throw DataError("scores file: header lacks S=");
  scores.num_shadows = std::stoi(line.substr(s_pos + 3));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string id, shadow, flag, loss, logit;
    if (!std::getline(cells, id, '\t') || !std::getline(cells, shadow, '\t') ||
        !std::getline(cells, flag, '\t') || !std::getline(cells, loss, '\t') ||
        !std::getline(cells, logit, '\t')) {
      throw DataError("scores file line " + std::to_string(line_no) +
                      ": expected 5 tab-separated fields");
    }
    ScoreRow r;
    r.instance_id = std::stoll(id);
    r.shadow_index = std::stoi(shadow);
    if (flag != "0" && flag != "1") {
      throw DataError("scores file line " + std::to_string(line_no) +
                      ": in_flag must be 0 or 1");
    }
    r.in = flag == "1";
    r.loss = ParseReal(loss, line_no);
    r.logit_confidence = ParseReal(logit, line_no);
    if (!std::isfinite(r.loss) || !std::isfinite(r.logit_confidence)) {
      throw DataError("scores file line " + std::to_string(line_no) +
                      ": non-finite score");
    }
    scores.rows.push_back(r);
  }
  return scores;
}

void WriteScoresFile(const ShadowScores& scores, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  WriteScores(scores, out);
}

ShadowScores ReadScoresFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scores file " + path.string());
  return ReadScores(in);
}

std::map<InstanceId, ShadowRecord> CollectRecords(const ShadowScores& scores,
                                                  ScoreKind kind) {
  std::vector<const ScoreRow*> rows;
  rows.reserve(scores.rows.size());
  for (const ScoreRow& r : scores.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const ScoreRow* a, const ScoreRow* b) {
    return a->shadow_index < b->shadow_index;
  });
  std::map<InstanceId, ShadowRecord> records;
  for (const ScoreRow* r : rows) {
    ShadowRecord& rec = records[r->instance_id];
    rec.instance_id = r->instance_id;
    rec.kind = kind;
    (r->in ? rec.in_scores : rec.out_scores).push_back(r->Score(kind));
  }
  return records;
}

GaussianPair FitGaussians(std::span<const double> in_scores,
                          std::span<const double> out_scores, double sigma_floor) {
  if (in_scores.size() < 2 || out_scores.size() < 2) {
    throw DataError("fitting IN/OUT Gaussians needs >= 2 scores per side, got " +
                    std::to_string(in_scores.size()) + " IN and " +
                    std::to_string(out_scores.size()) + " OUT");
  }
  GaussianPair g;
  g.mu_in = Mean(in_scores);
  g.mu_out = Mean(out_scores);
  g.sigma_in = std::max(SampleStddev(in_scores, g.mu_in), sigma_floor);
  g.sigma_out = std::max(SampleStddev(out_scores, g.mu_out), sigma_floor);
  return g;
}

GaussianPair FitGaussians(const ShadowRecord& record, double sigma_floor) {
  try {
    return FitGaussians(record.in_scores, record.out_scores, sigma_floor);
  } catch (const Error& e) {
    throw DataError("instance " + std::to_string(record.instance_id) + ": " + e.what());
  }
}

bool ShadowEnsemble::IsMember(int shadow, InstanceId id) const {
  const auto& m = members.at(shadow);
  return std::binary_search(m.begin(), m.end(), id);
}

ShadowScores ScoreShadowModels(std::span<const ModelParams> models,
                               const std::vector<std::vector<InstanceId>>& members,
                               const LabeledDataset& pool) {
  if (members.size() != models.size()) {
    throw ConfigError("one member list per shadow model is required");
  }
  ShadowScores scores;
  scores.num_shadows = static_cast<int>(models.size());
  scores.rows.reserve(models.size() * pool.size());
  for (std::size_t s = 0; s < models.size(); ++s) {
    Matrix probs = PredictBatch(models[s], pool.features());
    const auto losses = PerExampleLoss(probs, pool.labels());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const InstanceId id = pool.ids()[i];
      ScoreRow r;
      r.instance_id = id;
      r.shadow_index = static_cast<int>(s);
      r.in = std::binary_search(members[s].begin(), members[s].end(), id);
      r.loss = losses[i];
      r.logit_confidence = LogitConfidence(probs.row(i), pool.labels()[i]);
      scores.rows.push_back(r);
    }
  }
  return scores;
}

ShadowEnsemble TrainShadowEnsemble(const LabeledDataset& pool, int shadows,
                                   const MistConfig& recipe, std::uint64_t seed,
                                   ShadowSplitMode mode, int threads) {
  if (shadows < 4) {
    throw ConfigError("shadow count must be >= 4, got " + std::to_string(shadows));
  }
  ShadowEnsemble ensemble;
  ensemble.members = MakeShadowMembership(pool.ids(), shadows, mode, seed);
  CheckShadowCoverage(pool.ids(), ensemble.members);

  std::vector<std::optional<ModelParams>> trained(shadows);
  ParallelFor(shadows, threads, [&](std::size_t s) {
    MistConfig cfg = recipe;
    cfg.seed = DeriveSeed(seed, {NameTag("shadow"), s});
    cfg.threads = 1;
    cfg.record_metrics = false;
    LabeledDataset members = pool.WithIds(ensemble.members[s]);
    trained[s] = TrainModel(members, nullptr, cfg).final_params;
  });
  ensemble.models.reserve(shadows);
  for (auto& m : trained) ensemble.models.push_back(std::move(*m));
  ensemble.scores = ScoreShadowModels(ensemble.models, ensemble.members, pool);
  return ensemble;
}

}  // namespace mistlab
