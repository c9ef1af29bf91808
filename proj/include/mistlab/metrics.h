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

#ifndef MISTLAB_METRICS_H_
#define MISTLAB_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mistlab/attacks.h"
#include "mistlab/shadow.h"

namespace mistlab {

// FPR targets reported by default.
inline const std::vector<double> kDefaultFprTargets = {0.001, 0.005, 0.01};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // predict member when score >= threshold
  std::size_t false_positives = 0;
  std::size_t true_positives = 0;
};

// Exact threshold sweep. Starts at (0, 0) with threshold +inf and ends at
// (1, 1); instances with equal scores cross a threshold together.
struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  // Twice the area under the curve in units of (member, nonmember) pairs.
  std::uint64_t twice_area_pairs = 0;
};

RocCurve Roc(std::span<const double> scores, const std::vector<bool>& is_member);
RocCurve Roc(const AttackScores& scores);

// Trapezoidal area; equals P(member > nonmember) + P(tie) / 2.
double Auc(const RocCurve& curve);

struct TprAtFpr {
  double tpr = 0.0;
  double realized_fpr = 0.0;
  double threshold = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

// Best TPR over thresholds whose FPR does not exceed the target.
TprAtFpr TprAtFprTarget(const RocCurve& curve, double fpr_target);

// Positive likelihood ratio TPR / FPR.
double Plr(double tpr, double fpr);

struct PlrEntry {
  double fpr_target = 0.0;
  double tpr = 0.0;
  double plr = 0.0;           // against the target FPR
  double realized_fpr = 0.0;
  double plr_realized = 0.0;  // against the realized FPR, NaN when it is 0
  bool realized_fpr_zero = false;
};

struct MetricsReport {
  std::string dataset;
  std::string defense;
  std::string attack_name;
  double auc = 0.0;
  std::vector<PlrEntry> at;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;

  const PlrEntry& At(double fpr_target) const;

  // "key = value" lines.
  std::string ToKeyValue() const;
  // dataset, defense, attack, auc, tpr@f, plr@f ..., realized_fprs
  std::string ToCsvRow() const;
  static std::string CsvHeader(std::span<const double> fpr_targets);
};

MetricsReport Evaluate(const AttackScores& scores, std::span<const double> fpr_targets,
                       const std::string& dataset, const std::string& defense);

// Per-class AUC over the class tags carried by the scores; NaN for classes
// missing members or nonmembers.
std::map<int, double> ClassConditionalAuc(const AttackScores& scores);

// 1 - integral of min(N_in, N_out), from the crossing points of the two
// densities.
double NonOverlap(const GaussianPair& g);

struct VulnerableInstance {
  InstanceId id = 0;
  double non_overlap = 0.0;
};

// Top-k instances by IN/OUT non-overlap, descending (ties by id).
std::vector<VulnerableInstance> VulnerabilityRank(
    const std::map<InstanceId, GaussianPair>& gaussians, std::size_t top_k);

double NormalCdf(double z);

}  // namespace mistlab

#endif  // MISTLAB_METRICS_H_
