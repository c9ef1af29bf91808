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

#ifndef MISTLAB_PARAMS_H_
#define MISTLAB_PARAMS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mistlab {

// Flat parameter vector of an MLP classifier together with its layer shape.
//
// layer_dims = {input, hidden..., classes}. For each layer l the weights come
// first as a dims[l] x dims[l+1] row-major block (input-major), followed by
// the dims[l+1] biases. Instances are immutable; arithmetic returns new
// objects.
class ModelParams {
 public:
  ModelParams(std::vector<int> layer_dims, std::vector<double> values);

  static ModelParams Zeros(std::vector<int> layer_dims);
  // Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)) per weight, zero
  // biases.
  static ModelParams GlorotUniform(std::vector<int> layer_dims,
                                   std::uint64_t seed);

  static std::size_t CountFor(std::span<const int> layer_dims);

  const std::vector<int>& layer_dims() const { return layer_dims_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  int num_layers() const { return static_cast<int>(layer_dims_.size()) - 1; }
  int input_dim() const { return layer_dims_.front(); }
  int num_classes() const { return layer_dims_.back(); }

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] +
           static_cast<std::size_t>(layer_dims_[layer]) * layer_dims_[layer + 1];
  }

  // FNV-1a over the raw bytes of values; used to assert immutability.
  std::uint64_t Checksum() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.layer_dims_ == b.layer_dims_ && a.values_ == b.values_;
  }

 private:
  std::vector<int> layer_dims_;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
};

// dLoss/dParams; same layout as ModelParams::values.
struct Gradient {
  std::vector<int> layer_dims;
  std::vector<double> values;

  static Gradient ZerosLike(const ModelParams& params) {
    return {params.layer_dims(), std::vector<double>(params.size(), 0.0)};
  }
};

// Throws a kNumeric error when the two layouts differ.
void CheckSameLayout(const std::vector<int>& a, const std::vector<int>& b);

// values - lr * grad. Rejects non-finite gradient entries, naming the first
// offending index.
ModelParams SgdStep(const ModelParams& params, const Gradient& grad, double lr);

// Elementwise arithmetic mean, summed in the given order then divided by the
// count.
ModelParams AverageParams(std::span<const ModelParams> models);

}  // namespace mistlab

#endif  // MISTLAB_PARAMS_H_
