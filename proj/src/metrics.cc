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

#include "mistlab/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "mistlab/error.h"

namespace mistlab {
namespace {

std::string FormatReal(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

// Mass of N(mu, sigma) on [lo, hi].
double NormalMass(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  // Use the upper tail when both ends are right of the mean for accuracy.
  if (a > 0.0) return NormalCdf(-a) - NormalCdf(-b);
  return NormalCdf(b) - NormalCdf(a);
}

double LogDensity(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma);
}

}  // namespace

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

RocCurve Roc(std::span<const double> scores, const std::vector<bool>& is_member) {
  if (scores.size() != is_member.size()) {
    throw ConfigError("scores and membership labels differ in length");
  }
  RocCurve curve;
  for (bool m : is_member) (m ? curve.positives : curve.negatives)++;
  if (curve.positives == 0 || curve.negatives == 0) {
    throw DataError("ROC needs at least one member and one nonmember");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double P = static_cast<double>(curve.positives);
  const double N = static_cast<double>(curve.negatives);
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity(), 0, 0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::uint64_t area = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    std::size_t group_tp = 0;
    std::size_t group_fp = 0;
    while (i < order.size() && scores[order[i]] == threshold) {
      (is_member[order[i]] ? group_tp : group_fp)++;
      ++i;
    }
    area += static_cast<std::uint64_t>(group_fp) * (2 * tp + group_tp);
    tp += group_tp;
    fp += group_fp;
    curve.points.push_back(
        {static_cast<double>(fp) / N, static_cast<double>(tp) / P, threshold, fp, tp});
  }
  curve.twice_area_pairs = area;
  return curve;
}

RocCurve Roc(const AttackScores& scores) { return Roc(scores.scores, scores.is_member); }

double Auc(const RocCurve& curve) {
  const double pairs = static_cast<double>(curve.positives) *
                       static_cast<double>(curve.negatives);
  return static_cast<double>(curve.twice_area_pairs) / (2.0 * pairs);
}

TprAtFpr TprAtFprTarget(const RocCurve& curve, double fpr_target) {
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) {
    throw ConfigError("FPR target must lie in (0, 1)");
  }
  const double N = static_cast<double>(curve.negatives);
  TprAtFpr best;
  for (const RocPoint& p : curve.points) {
    if (static_cast<double>(p.false_positives) / N > fpr_target) break;
    best.tpr = p.tpr;
    best.realized_fpr = p.fpr;
    best.threshold = p.threshold;
    best.true_positives = p.true_positives;
    best.false_positives = p.false_positives;
  }
  return best;
}

double Plr(double tpr, double fpr) {
  if (!(fpr > 0.0)) throw ConfigError("PLR needs a positive FPR");
  return tpr / fpr;
}

const PlrEntry& MetricsReport::At(double fpr_target) const {
  for (const PlrEntry& e : at) {
    if (e.fpr_target == fpr_target) return e;
  }
  throw ConfigError("no metrics at FPR " + FormatReal(fpr_target));
}

std::string MetricsReport::ToKeyValue() const {
  std::ostringstream out;
  out << "dataset = " << dataset << '\n'
      << "defense = " << defense << '\n'
      << "attack = " << attack_name << '\n'
      << "auc = " << FormatReal(auc) << '\n'
      << "n_members = " << n_members << '\n'
      << "n_nonmembers = " << n_nonmembers << '\n';
  for (const PlrEntry& e : at) {
    const std::string f = FormatReal(e.fpr_target);
    out << "tpr@" << f << " = " << FormatReal(e.tpr) << '\n'
        << "plr@" << f << " = " << FormatReal(e.plr) << '\n'
        << "realized_fpr@" << f << " = " << FormatReal(e.realized_fpr) << '\n'
        << "plr_realized@" << f << " = " << FormatReal(e.plr_realized) << '\n';
  }
  return out.str();
}

std::string MetricsReport::CsvHeader(std::span<const double> fpr_targets) {
  std::string h = "dataset,defense,attack,auc";
  for (double f : fpr_targets) {
    h += ",tpr@" + FormatReal(f) + ",plr@" + FormatReal(f);
  }
  h += ",realized_fprs";
  return h;
}

std::string MetricsReport::ToCsvRow() const {
  std::ostringstream out;
  out << dataset << ',' << defense << ',' << attack_name << ',' << FormatReal(auc);
  for (const PlrEntry& e : at) out << ',' << FormatReal(e.tpr) << ',' << FormatReal(e.plr);
  out << ',';
  for (std::size_t i = 0; i < at.size(); ++i) {
    if (i) out << ';';
    out << FormatReal(at[i].realized_fpr);
    if (at[i].realized_fpr_zero) out << '*';
  }
  return out.str();
}

MetricsReport Evaluate(const AttackScores& scores, std::span<const double> fpr_targets,
                       const std::string& dataset, const std::string& defense) {
  scores.Validate();
  const RocCurve curve = Roc(scores);
  MetricsReport report;
  report.dataset = dataset;
  report.defense = defense;
  report.attack_name = scores.attack_name;
  report.auc = Auc(curve);
  report.n_members = curve.positives;
  report.n_nonmembers = curve.negatives;
  for (double f : fpr_targets) {
    const TprAtFpr t = TprAtFprTarget(curve, f);
    PlrEntry e;
    e.fpr_target = f;
    e.tpr = t.tpr;
    e.plr = Plr(t.tpr, f);
    e.realized_fpr = t.realized_fpr;
    e.realized_fpr_zero = t.false_positives == 0;
    e.plr_realized = e.realized_fpr_zero ? std::numeric_limits<double>::quiet_NaN()
                                         : t.tpr / t.realized_fpr;
    report.at.push_back(e);
  }
  return report;
}

std::map<int, double> ClassConditionalAuc(const AttackScores& scores) {
  std::map<int, std::pair<std::vector<double>, std::vector<bool>>> by_class;
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    auto& [s, m] = by_class[scores.labels.at(i)];
    s.push_back(scores.scores[i]);
    m.push_back(scores.is_member[i]);
  }
  std::map<int, double> out;
  for (const auto& [label, sm] : by_class) {
    const auto& [s, m] = sm;
    const auto members = std::count(m.begin(), m.end(), true);
    if (members == 0 || members == static_cast<std::ptrdiff_t>(m.size())) {
      out[label] = std::numeric_limits<double>::quiet_NaN();
    } else {
      out[label] = Auc(Roc(s, m));
    }
  }
  return out;
}

double NonOverlap(const GaussianPair& g) {
  const double m1 = g.mu_in, s1 = g.sigma_in, m2 = g.mu_out, s2 = g.sigma_out;
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw ConfigError("Gaussian sigmas must be positive");
  // log N1(x) - log N2(x) = a x^2 + b x + c
  const double a = 0.5 / (s2 * s2) - 0.5 / (s1 * s1);
  const double b = m1 / (s1 * s1) - m2 / (s2 * s2);
  const double c = 0.5 * m2 * m2 / (s2 * s2) - 0.5 * m1 * m1 / (s1 * s1) +
                   std::log(s2 / s1);
  std::vector<double> roots;
  const double scale = std::max({std::abs(a), 1.0 / (s1 * s1), 1.0 / (s2 * s2)});
  if (std::abs(a) <= 1e-14 * scale) {
    if (b == 0.0) return 0.0;  // identical densities
    roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc > 0.0) {
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      roots.push_back(q / a);
      if (q != 0.0) roots.push_back(c / q);
    } else if (disc == 0.0) {
      roots.push_back(-b / (2.0 * a));
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> edges;
  edges.push_back(-std::numeric_limits<double>::infinity());
  edges.insert(edges.end(), roots.begin(), roots.end());
  edges.push_back(std::numeric_limits<double>::infinity());
  double overlap = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double lo = edges[i];
    const double hi = edges[i + 1];
    double probe;
    if (std::isinf(lo) && std::isinf(hi)) {
      probe = m1;
    } else if (std::isinf(lo)) {
      probe = hi - 1.0 - std::abs(hi);
    } else if (std::isinf(hi)) {
      probe = lo + 1.0 + std::abs(lo);
    } else {
      probe = 0.5 * (lo + hi);
    }
    const bool first_lower = LogDensity(probe, m1, s1) < LogDensity(probe, m2, s2);
    overlap += first_lower ? NormalMass(m1, s1, lo, hi) : NormalMass(m2, s2, lo, hi);
  }
  return std::clamp(1.0 - overlap, 0.0, 1.0);
}

std::vector<VulnerableInstance> VulnerabilityRank(
    const std::map<InstanceId, GaussianPair>& gaussians, std::size_t top_k) {
  if (top_k > gaussians.size()) {
    throw ConfigError("top_k " + std::to_string(top_k) + " exceeds the " +
                      std::to_string(gaussians.size()) + " ranked instances");
  }
  std::vector<VulnerableInstance> all;
  all.reserve(gaussians.size());
  for (const auto& [id, g] : gaussians) all.push_back({id, NonOverlap(g)});
  std::stable_sort(all.begin(), all.end(),
                   [](const VulnerableInstance& a, const VulnerableInstance& b) {
                     return a.non_overlap > b.non_overlap;
                   });
  all.resize(top_k);
  return all;
}

}  // namespace mistlab
