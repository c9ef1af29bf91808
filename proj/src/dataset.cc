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

#include "mistlab/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>

#include "mistlab/error.h"

namespace mistlab {
namespace {

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t' || c.back() == '\r')) {
      c.remove_suffix(1);
    }
  }
  return cells;
}

bool ParseDouble(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels,
                               std::vector<InstanceId> ids, int num_classes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      ids_(std::move(ids)),
      num_classes_(num_classes) {
  if (labels_.empty()) throw DataError("dataset must contain at least one row");
  if (features_.rows() != labels_.size() || ids_.size() != labels_.size()) {
    throw DataError("features, labels and ids disagree on the row count");
  }
  if (features_.cols() == 0) throw DataError("dataset has zero feature columns");
  if (num_classes_ < 1) throw DataError("num_classes must be positive");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw DataError("label " + std::to_string(labels_[i]) + " of id " +
                      std::to_string(ids_[i]) + " outside [0," +
                      std::to_string(num_classes_) + ")");
    }
    if (!index_.emplace(ids_[i], i).second) {
      throw DataError("duplicate instance id " + std::to_string(ids_[i]));
    }
  }
}

std::size_t LabeledDataset::PositionOf(InstanceId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown instance id " + std::to_string(id));
  return it->second;
}

LabeledDataset LabeledDataset::Rows(std::span<const std::size_t> positions) const {
  std::vector<int> labels;
  std::vector<InstanceId> ids;
  labels.reserve(positions.size());
  ids.reserve(positions.size());
  for (std::size_t p : positions) {
    labels.push_back(labels_[p]);
    ids.push_back(ids_[p]);
  }
  return LabeledDataset(GatherRows(features_, positions), std::move(labels),
                        std::move(ids), num_classes_);
}

LabeledDataset LabeledDataset::WithIds(std::span<const InstanceId> ids) const {
  std::vector<std::size_t> positions;
  positions.reserve(ids.size());
  for (InstanceId id : ids) positions.push_back(PositionOf(id));
  return Rows(positions);
}

bool LabeledDataset::HasBinaryFeatures() const {
  for (double v : features_.data()) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

LabeledDataset LoadCsv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
  const auto header = SplitCommas(line);
  std::ptrdiff_t label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) label_col = static_cast<std::ptrdiff_t>(c);
  }
  if (label_col < 0) {
    throw DataError(path.string() + ": no '" + schema.label_column + "' column in header");
  }
  const std::size_t width = header.size();
  const std::size_t dim = width - 1;
  if (dim == 0) throw DataError(path.string() + ": no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitCommas(line);
    if (cells.size() != width) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      if (!ParseDouble(cells[c], v) || !std::isfinite(v)) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) +
                        ", column " + std::to_string(c + 1) + " ('" +
                        std::string(header[c]) + "'): not a finite number: '" +
                        std::string(cells[c]) + "'");
      }
      if (static_cast<std::ptrdiff_t>(c) == label_col) {
        if (v != std::floor(v) || v < 0 ||
            (schema.num_classes && v >= *schema.num_classes)) {
          throw DataError(path.string() + ": line " + std::to_string(line_no) +
                          ": label '" + std::string(cells[c]) +
                          "' is not a class index in range");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw DataError(path.string() + ": no data rows");
  const int classes = schema.num_classes.value_or(
      *std::max_element(labels.begin(), labels.end()) + 1);
  Matrix features(labels.size(), dim);
  std::copy(values.begin(), values.end(), features.data().begin());
  std::vector<InstanceId> ids(labels.size());
  std::iota(ids.begin(), ids.end(), InstanceId{0});
  return LabeledDataset(std::move(features), std::move(labels), std::move(ids),
                        classes);
}

void WriteCsv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "label";
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",f" << j;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels()[i];
    for (double v : data.features().row(i)) out << ',' << v;
    out << '\n';
  }
}

LabeledDataset GenerateSynthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic data needs classes >= 2");
  if (spec.dim < 1) throw ConfigError("synthetic data needs dim >= 1");
  if (spec.per_class < 1) throw ConfigError("synthetic data needs per_class >= 1");
  if (!(spec.cluster_spread >= 0.0) || !std::isfinite(spec.cluster_spread)) {
    throw ConfigError("cluster_spread must be finite and >= 0");
  }
  Rng rng(DeriveSeed(spec.seed, {NameTag("synthetic")}));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(spec.classes, spec.dim);
  for (double& v : means.data()) v = spec.center_scale * normal(rng);

  const std::size_t n = static_cast<std::size_t>(spec.classes) * spec.per_class;
  Matrix features(n, spec.dim);
  std::vector<int> labels(n);
  std::size_t row = 0;
  for (int i = 0; i < spec.per_class; ++i) {
    for (int k = 0; k < spec.classes; ++k, ++row) {
      labels[row] = k;
      for (int j = 0; j < spec.dim; ++j) {
        const double noise = normal(rng);
        features(row, j) = means(k, j) + spec.cluster_spread * noise;
      }
    }
  }
  std::vector<InstanceId> ids(n);
  std::iota(ids.begin(), ids.end(), InstanceId{0});
  return LabeledDataset(std::move(features), std::move(labels), std::move(ids),
                        spec.classes);
}

std::vector<InstanceId> KeyedOrder(std::span<const InstanceId> ids, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, InstanceId>> keyed;
  keyed.reserve(ids.size());
  for (InstanceId id : ids) {
    keyed.emplace_back(MixBits(seed ^ MixBits(static_cast<std::uint64_t>(id))), id);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<InstanceId> order;
  order.reserve(ids.size());
  for (const auto& [key, id] : keyed) order.push_back(id);
  return order;
}

PartitionPlan Partition(std::span<const InstanceId> ids, int count,
                        std::uint64_t seed, int epoch) {
  if (count < 1) throw ConfigError("partition count must be >= 1");
  if (static_cast<std::size_t>(count) > ids.size()) {
    throw ConfigError("cannot partition " + std::to_string(ids.size()) +
                      " instances into " + std::to_string(count) + " subsets");
  }
  const std::vector<InstanceId> order = KeyedOrder(ids, seed);
  const std::size_t base = order.size() / count;
  const std::size_t extra = order.size() % count;
  PartitionPlan plan;
  plan.epoch = epoch;
  plan.subsets.resize(count);
  std::size_t start = 0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(count); ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    plan.subsets[c].assign(order.begin() + start, order.begin() + start + len);
    start += len;
  }
  return plan;
}

double SampleBeta(double alpha, double beta, Rng& rng) {
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

MixedBatch MixupWithWeights(const Matrix& features, std::span<const int> labels,
                            int num_classes, std::span<const std::size_t> partners,
                            std::span<const double> betas) {
  const std::size_t n = features.rows();
  if (partners.size() != n || betas.size() != n || labels.size() != n) {
    throw ConfigError("mixup partners/betas must match the batch size");
  }
  MixedBatch out;
  out.features = Matrix(n, features.cols());
  out.soft_labels = Matrix(n, num_classes);
  out.partners.assign(partners.begin(), partners.end());
  out.betas.assign(betas.begin(), betas.end());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = partners[i];
    const double b = betas[i];
    if (j >= n) throw ConfigError("mixup partner index out of range");
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("mixup weight outside [0,1]");
    auto xi = features.row(i);
    auto xj = features.row(j);
    auto o = out.features.row(i);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] = b * xi[c] + (1.0 - b) * xj[c];
    out.soft_labels(i, labels[i]) += b;
    out.soft_labels(i, labels[j]) += 1.0 - b;
  }
  return out;
}

MixedBatch MixupBatch(const Matrix& features, std::span<const int> labels,
                      int num_classes, double alpha, Rng& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("mixup alpha must be positive and finite");
  }
  const std::size_t n = features.rows();
  if (n < 2) throw ConfigError("mixup needs a batch of at least two instances");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> partners(n);
  std::vector<double> betas(n);
  for (std::size_t i = 0; i < n; ++i) {
    partners[i] = pick(rng);
    betas[i] = SampleBeta(alpha, alpha, rng);
  }
  return MixupWithWeights(features, labels, num_classes, partners, betas);
}

std::vector<InstanceId> SplitSpec::PoolIds() const {
  std::vector<InstanceId> pool = member_ids;
  pool.insert(pool.end(), nonmember_ids.begin(), nonmember_ids.end());
  std::sort(pool.begin(), pool.end());
  return pool;
}

SplitSpec MakeSplit(std::span<const InstanceId> ids, const SplitSizes& sizes,
                    std::uint64_t seed) {
  const std::size_t need =
      sizes.members + sizes.nonmembers + sizes.validation + sizes.test;
  if (need > ids.size()) {
    throw ConfigError("split needs " + std::to_string(need) + " instances, dataset has " +
                      std::to_string(ids.size()));
  }
  if (sizes.members != sizes.nonmembers) {
    throw ConfigError("member and nonmember splits must be the same size");
  }
  std::vector<InstanceId> order(ids.begin(), ids.end());
  Rng rng(DeriveSeed(seed, {NameTag("split")}));
  std::shuffle(order.begin(), order.end(), rng);
  SplitSpec split;
  auto take = [&order, pos = std::size_t{0}](std::size_t n) mutable {
    std::vector<InstanceId> out(order.begin() + pos, order.begin() + pos + n);
    std::sort(out.begin(), out.end());
    pos += n;
    return out;
  };
  split.member_ids = take(sizes.members);
  split.nonmember_ids = take(sizes.nonmembers);
  split.validation_ids = take(sizes.validation);
  split.test_ids = take(sizes.test);
  return split;
}

std::vector<std::vector<InstanceId>> MakeShadowMembership(
    std::span<const InstanceId> pool, int shadows, ShadowSplitMode mode,
    std::uint64_t seed) {
  if (shadows < 1) throw ConfigError("shadow count must be >= 1");
  std::vector<std::vector<InstanceId>> in(shadows);
  Rng rng(DeriveSeed(seed, {NameTag("shadow-membership")}));
  if (mode == ShadowSplitMode::kIndependent) {
    for (int s = 0; s < shadows; ++s) {
      std::vector<InstanceId> order(pool.begin(), pool.end());
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(order.size() / 2);
      std::sort(order.begin(), order.end());
      in[s] = std::move(order);
    }
    return in;
  }
  std::vector<int> slots(shadows);
  std::iota(slots.begin(), slots.end(), 0);
  for (InstanceId id : pool) {
    std::shuffle(slots.begin(), slots.end(), rng);
    for (int s = 0; s < shadows / 2; ++s) in[slots[s]].push_back(id);
  }
  for (auto& v : in) std::sort(v.begin(), v.end());
  return in;
}

void CheckShadowCoverage(std::span<const InstanceId> pool,
                         const std::vector<std::vector<InstanceId>>& shadow_in) {
  std::unordered_map<InstanceId, int> in_count;
  for (InstanceId id : pool) in_count[id] = 0;
  for (const auto& members : shadow_in) {
    for (InstanceId id : members) {
      auto it = in_count.find(id);
      if (it == in_count.end()) {
        throw DataError("shadow member id " + std::to_string(id) + " is not in the pool");
      }
      ++it->second;
    }
  }
  const int total = static_cast<int>(shadow_in.size());
  std::vector<InstanceId> uncovered;
  for (InstanceId id : pool) {
    const int c = in_count[id];
    if (c < 2 || total - c < 2) uncovered.push_back(id);
  }
  if (!uncovered.empty()) {
    std::ostringstream msg;
    msg << "insufficient shadow IN/OUT coverage (need >=2 each) for "
        << uncovered.size() << " ids:";
    const std::size_t shown = std::min<std::size_t>(uncovered.size(), 50);
    for (std::size_t i = 0; i < shown; ++i) msg << ' ' << uncovered[i];
    if (shown < uncovered.size()) msg << " ...";
    throw DataError(msg.str());
  }
}

void ValidateSplit(const SplitSpec& split) {
  if (split.member_ids.size() != split.nonmember_ids.size()) {
    throw DataError("evaluation set is not balanced: " +
                    std::to_string(split.member_ids.size()) + " members vs " +
                    std::to_string(split.nonmember_ids.size()) + " nonmembers");
  }
  std::set<InstanceId> seen;
  for (const auto* ids : {&split.member_ids, &split.nonmember_ids,
                          &split.validation_ids, &split.test_ids}) {
    for (InstanceId id : *ids) {
      if (!seen.insert(id).second) {
        throw DataError("id " + std::to_string(id) + " appears in two splits");
      }
    }
  }
  if (!split.shadow_in.empty()) {
    const auto pool = split.PoolIds();
    CheckShadowCoverage(pool, split.shadow_in);
  }
}

ShadowSplitMode ParseShadowSplitMode(const std::string& name) {
  if (name == "balanced") return ShadowSplitMode::kBalanced;
  if (name == "independent") return ShadowSplitMode::kIndependent;
  throw ConfigError("unknown shadow split mode '" + name + "'");
}

}  // namespace mistlab
