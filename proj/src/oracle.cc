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

#include "mistlab/oracle.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mistlab/error.h"
#include "mistlab/mlp.h"

namespace mistlab {
namespace {

// Lexicographic (label, features) comparison of two rows.
bool RowLess(const LabeledDataset& d, std::size_t a, std::size_t b) {
  if (d.labels()[a] != d.labels()[b]) return d.labels()[a] < d.labels()[b];
  const auto ra = d.features().row(a);
  const auto rb = d.features().row(b);
  return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
}

bool RowEqual(const LabeledDataset& d, std::size_t a, std::size_t b) {
  if (d.labels()[a] != d.labels()[b]) return false;
  const auto ra = d.features().row(a);
  const auto rb = d.features().row(b);
  return std::equal(ra.begin(), ra.end(), rb.begin(), rb.end());
}

// FNV-1a over the label and feature bytes, kept non-negative.
InstanceId ContentId(const LabeledDataset& d, std::size_t row) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const int label = d.labels()[row];
  mix(&label, sizeof label);
  for (double v : d.features().row(row)) mix(&v, sizeof v);
  return static_cast<InstanceId>(h >> 1);
}

ModelParams Fit(const LabeledDataset& data, const MistConfig& cfg) {
  MistConfig quiet = cfg;
  quiet.record_metrics = false;
  return TrainModel(CanonicalTrainingSet(data), nullptr, quiet).final_params;
}

std::vector<double> TrueClassProbs(const ModelParams& model, const LabeledDataset& probes) {
  const Matrix probs = PredictBatch(model, probes.features());
  std::vector<double> out(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) out[i] = probs(i, probes.labels()[i]);
  return out;
}

}  // namespace

LabeledDataset CanonicalTrainingSet(const LabeledDataset& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return RowLess(data, a, b); });
  order.erase(std::unique(order.begin(), order.end(),
                          [&](std::size_t a, std::size_t b) { return RowEqual(data, a, b); }),
              order.end());
  Matrix features(order.size(), data.dim());
  std::vector<int> labels(order.size());
  std::vector<InstanceId> ids(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::ranges::copy(data.features().row(order[i]), features.row(i).begin());
    labels[i] = data.labels()[order[i]];
    ids[i] = ContentId(data, order[i]);
  }
  return LabeledDataset(std::move(features), std::move(labels), std::move(ids),
                        data.num_classes());
}

LooReport LooInvarianceOracle(const LabeledDataset& data, const MistConfig& cfg,
                              const LabeledDataset* probes,
                              const LooOracleConfig& oracle) {
  if (data.size() > kOracleMaxInstances) {
    throw ConfigError("oracle data has " + std::to_string(data.size()) +
                      " instances; the limit is " + std::to_string(kOracleMaxInstances));
  }
  if (data.size() < 2) throw ConfigError("oracle needs at least 2 instances");
  const LabeledDataset& probe_set = probes ? *probes : data;
  if (probe_set.size() == 0) throw ConfigError("oracle probe set is empty");

  std::vector<InstanceId> removed = oracle.removal_ids;
  if (removed.empty()) {
    if (oracle.removals < 1) throw ConfigError("oracle removals must be >= 1");
    if (static_cast<std::size_t>(oracle.removals) > data.size()) {
      throw ConfigError("oracle removals exceed the instance count");
    }
    removed = data.ids();
    Rng rng(oracle.seed);
    std::shuffle(removed.begin(), removed.end(), rng);
    removed.resize(oracle.removals);
  }
  for (InstanceId id : removed) data.PositionOf(id);  // reject unknown ids early

  LooReport report;
  report.distinct_instances = CanonicalTrainingSet(data).size();
  const auto full = TrueClassProbs(Fit(data, cfg), probe_set);
  double total = 0.0;
  for (InstanceId id : removed) {
    std::vector<InstanceId> keep;
    keep.reserve(data.size() - 1);
    for (InstanceId other : data.ids()) {
      if (other != id) keep.push_back(other);
    }
    const auto loo = TrueClassProbs(Fit(data.WithIds(keep), cfg), probe_set);
    double gap = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) {
      gap = std::max(gap, std::abs(full[i] - loo[i]));
    }
    report.removals.push_back({id, gap});
    total += gap;
  }
  report.mean_gap = total / static_cast<double>(removed.size());
  return report;
}

}  // namespace mistlab
