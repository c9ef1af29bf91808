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

#ifndef MISTLAB_DATASET_H_
#define MISTLAB_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mistlab/matrix.h"
#include "mistlab/rng.h"

namespace mistlab {

using InstanceId = std::int64_t;

// N x d features, N labels in [0, K), N unique stable ids.
class LabeledDataset {
 public:
  LabeledDataset(Matrix features, std::vector<int> labels,
                 std::vector<InstanceId> ids, int num_classes);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<InstanceId>& ids() const { return ids_; }

  // Row index of an id; throws a data error for unknown ids.
  std::size_t PositionOf(InstanceId id) const;
  bool Contains(InstanceId id) const { return index_.contains(id); }

  LabeledDataset Rows(std::span<const std::size_t> positions) const;
  LabeledDataset WithIds(std::span<const InstanceId> ids) const;

  // True when every feature value is 0 or 1.
  bool HasBinaryFeatures() const;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<InstanceId> ids_;
  int num_classes_;
  std::unordered_map<InstanceId, std::size_t> index_;
};

struct CsvSchema {
  std::string label_column = "label";
  // Inferred as max(label) + 1 when unset.
  std::optional<int> num_classes;
};

// Header row, a label column, every other column numeric. ids are row
// ordinals (0-based, header excluded).
LabeledDataset LoadCsv(const std::filesystem::path& path,
                       const CsvSchema& schema = {});
void WriteCsv(const LabeledDataset& data, const std::filesystem::path& path);

struct SyntheticSpec {
  int classes = 2;
  int dim = 2;
  int per_class = 1;
  double cluster_spread = 1.0;
  double center_scale = 1.0;  // std of the class means
  std::uint64_t seed = 0;
};

// Gaussian class clusters around seeded N(0, center_scale^2 I) means.
LabeledDataset GenerateSynthetic(const SyntheticSpec& spec);

struct PartitionPlan {
  int epoch = 0;
  std::vector<std::vector<InstanceId>> subsets;
};

// Epoch visiting order: ids sorted by a seeded hash of the id. Removing one id
// leaves the relative order of the others unchanged.
std::vector<InstanceId> KeyedOrder(std::span<const InstanceId> ids, std::uint64_t seed);

// KeyedOrder cut into `count` contiguous blocks whose sizes differ by at most
// one (the first N mod count blocks are one longer).
PartitionPlan Partition(std::span<const InstanceId> ids, int count,
                        std::uint64_t seed, int epoch = 0);

struct MixedBatch {
  Matrix features;
  Matrix soft_labels;
  std::vector<std::size_t> partners;
  std::vector<double> betas;
};

// x~ = b x_i + (1-b) x_j and y~ = b onehot(y_i) + (1-b) onehot(y_j) with a
// uniformly drawn partner j and b ~ Beta(alpha, alpha), one b per row.
MixedBatch MixupBatch(const Matrix& features, std::span<const int> labels,
                      int num_classes, double alpha, Rng& rng);

// Same interpolation with caller-chosen partners and mixing weights.
MixedBatch MixupWithWeights(const Matrix& features, std::span<const int> labels,
                            int num_classes, std::span<const std::size_t> partners,
                            std::span<const double> betas);

double SampleBeta(double alpha, double beta, Rng& rng);

enum class ShadowSplitMode {
  kBalanced,     // every pool instance is IN for exactly floor(S/2) shadows
  kIndependent,  // each shadow takes an independent uniform half of the pool
};

struct SplitSizes {
  std::size_t members = 0;
  std::size_t nonmembers = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

// Disjoint target splits; `shadow_in` lists each shadow model's training ids
// drawn from the member + nonmember pool.
struct SplitSpec {
  std::vector<InstanceId> member_ids;
  std::vector<InstanceId> nonmember_ids;
  std::vector<InstanceId> validation_ids;
  std::vector<InstanceId> test_ids;
  std::vector<std::vector<InstanceId>> shadow_in;

  std::vector<InstanceId> PoolIds() const;
};

SplitSpec MakeSplit(std::span<const InstanceId> ids, const SplitSizes& sizes,
                    std::uint64_t seed);

std::vector<std::vector<InstanceId>> MakeShadowMembership(
    std::span<const InstanceId> pool, int shadows, ShadowSplitMode mode,
    std::uint64_t seed);

// Throws when member/nonmember sizes differ, sets overlap, or some pool id is
// IN (or OUT) for fewer than two shadows. The message lists uncovered ids.
void ValidateSplit(const SplitSpec& split);
void CheckShadowCoverage(std::span<const InstanceId> pool,
                         const std::vector<std::vector<InstanceId>>& shadow_in);

ShadowSplitMode ParseShadowSplitMode(const std::string& name);

}  // namespace mistlab

#endif  // MISTLAB_DATASET_H_
