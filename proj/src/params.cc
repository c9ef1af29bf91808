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

#include "mistlab/params.h"

#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

#include "mistlab/error.h"
#include "mistlab/matrix.h"
#include "mistlab/rng.h"

namespace mistlab {
namespace {

std::string DimsToString(const std::vector<int>& dims) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << ",";
    out << dims[i];
  }
  out << "]";
  return out.str();
}

}  // namespace

Matrix GatherRows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = source.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::size_t ModelParams::CountFor(std::span<const int> layer_dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    n += static_cast<std::size_t>(layer_dims[l]) * layer_dims[l + 1] +
         layer_dims[l + 1];
  }
  return n;
}

ModelParams::ModelParams(std::vector<int> layer_dims, std::vector<double> values)
    : layer_dims_(std::move(layer_dims)), values_(std::move(values)) {
  if (layer_dims_.size() < 2) {
    throw ConfigError("layer_dims needs at least input and output sizes, got " +
                      DimsToString(layer_dims_));
  }
  for (int d : layer_dims_) {
    if (d <= 0) {
      throw ConfigError("layer_dims entries must be positive, got " +
                        DimsToString(layer_dims_));
    }
  }
  const std::size_t expected = CountFor(layer_dims_);
  if (values_.size() != expected) {
    throw NumericError("parameter vector has " + std::to_string(values_.size()) +
                       " values, layer_dims " + DimsToString(layer_dims_) +
                       " require " + std::to_string(expected));
  }
  offsets_.reserve(layer_dims_.size() - 1);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(layer_dims_[l]) * layer_dims_[l + 1] +
              layer_dims_[l + 1];
  }
}

ModelParams ModelParams::Zeros(std::vector<int> layer_dims) {
  const std::size_t n = CountFor(layer_dims);
  return ModelParams(std::move(layer_dims), std::vector<double>(n, 0.0));
}

ModelParams ModelParams::GlorotUniform(std::vector<int> layer_dims,
                                       std::uint64_t seed) {
  const std::size_t n = CountFor(layer_dims);
  std::vector<double> values(n, 0.0);
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    const std::size_t nw = static_cast<std::size_t>(fan_in) * fan_out;
    for (std::size_t i = 0; i < nw; ++i) values[offset + i] = dist(rng);
    offset += nw + fan_out;
  }
  return ModelParams(std::move(layer_dims), std::move(values));
}

std::uint64_t ModelParams::Checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values_) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void CheckSameLayout(const std::vector<int>& a, const std::vector<int>& b) {
  if (a != b) {
    throw NumericError("layer_dims mismatch: " + DimsToString(a) + " vs " +
                       DimsToString(b));
  }
}

ModelParams SgdStep(const ModelParams& params, const Gradient& grad, double lr) {
  CheckSameLayout(params.layer_dims(), grad.layer_dims);
  if (grad.values.size() != params.size()) {
    throw NumericError("gradient length " + std::to_string(grad.values.size()) +
                       " does not match parameter length " +
                       std::to_string(params.size()));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ConfigError("learning rate must be positive and finite");
  }
  std::vector<double> out(params.values().begin(), params.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double g = grad.values[i];
    if (!std::isfinite(g)) {
      throw NumericError("non-finite gradient entry at index " + std::to_string(i));
    }
    out[i] -= lr * g;
  }
  return ModelParams(params.layer_dims(), std::move(out));
}

ModelParams AverageParams(std::span<const ModelParams> models) {
  if (models.empty()) throw ConfigError("AverageParams needs at least one model");
  for (const ModelParams& m : models.subspan(1)) {
    CheckSameLayout(models.front().layer_dims(), m.layer_dims());
  }
  std::vector<double> sum(models.front().values().begin(),
                          models.front().values().end());
  for (const ModelParams& m : models.subspan(1)) {
    auto v = m.values();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  const double count = static_cast<double>(models.size());
  for (double& s : sum) s /= count;
  return ModelParams(models.front().layer_dims(), std::move(sum));
}

}  // namespace mistlab
