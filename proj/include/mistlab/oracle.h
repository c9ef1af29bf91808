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

#ifndef MISTLAB_ORACLE_H_
#define MISTLAB_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mistlab/dataset.h"
#include "mistlab/training.h"

namespace mistlab {

inline constexpr std::size_t kOracleMaxInstances = 512;

// Training data is treated as a set: rows are deduplicated by (label,
// features) and put in a canonical order before training, so the result
// depends only on the content of D. Ids become content hashes so that the
// epoch order of the remaining rows is unaffected by a removal.
LabeledDataset CanonicalTrainingSet(const LabeledDataset& data);

struct LooOracleConfig {
  int removals = 8;                         // R, sampled without replacement
  std::vector<InstanceId> removal_ids;      // explicit removals; overrides R
  std::uint64_t seed = 0;                   // removal sampling
};

struct LooRemoval {
  InstanceId removed = 0;
  double sup_gap = 0.0;  // max over probes of |F(x; D)_y - F(x; D \ {M})_y|
};

struct LooReport {
  std::vector<LooRemoval> removals;
  double mean_gap = 0.0;
  std::size_t distinct_instances = 0;
};

// Retrains with D and with D minus one instance under the same recipe and
// seed, and measures the largest true-class probability change on the probe
// set. Probes default to D itself when `probes` is null.
LooReport LooInvarianceOracle(const LabeledDataset& data, const MistConfig& cfg,
                              const LabeledDataset* probes,
                              const LooOracleConfig& oracle);

}  // namespace mistlab

#endif  // MISTLAB_ORACLE_H_
