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

#include "mistlab/mlp.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mistlab/error.h"

namespace mistlab {
namespace {

void CheckInputWidth(const ModelParams& params, std::size_t width) {
  if (width != static_cast<std::size_t>(params.input_dim())) {
    throw NumericError("input has length " + std::to_string(width) +
                       ", expected " + std::to_string(params.input_dim()));
  }
}

// out = in * W + b for one layer. The accumulation order of every output
// entry is fixed (bias, then k ascending), independent of the batch size.
Matrix AffineForward(const ModelParams& params, int layer, const Matrix& in) {
  const std::size_t fan_in = params.layer_dims()[layer];
  const std::size_t fan_out = params.layer_dims()[layer + 1];
  const double* w = params.values().data() + params.weight_offset(layer);
  const double* b = params.values().data() + params.bias_offset(layer);
  Matrix out(in.rows(), fan_out);
  for (std::size_t i = 0; i < in.rows(); ++i) {
    double* o = out.row(i).data();
    const double* a = in.row(i).data();
    std::copy(b, b + fan_out, o);
    for (std::size_t k = 0; k < fan_in; ++k) {
      const double ak = a[k];
      if (ak == 0.0) continue;
      const double* wk = w + k * fan_out;
      for (std::size_t j = 0; j < fan_out; ++j) o[j] += ak * wk[j];
    }
  }
  return out;
}

void ReluInPlace(Matrix& m) {
  for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

void SoftmaxRowsInPlace(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : r) v /= sum;
  }
}

Matrix Logits(const ModelParams& params, const Matrix& x, ForwardCache* cache) {
  CheckInputWidth(params, x.cols());
  const int layers = params.num_layers();
  Matrix current = AffineForward(params, 0, x);
  for (int l = 1; l < layers; ++l) {
    ReluInPlace(current);
    Matrix next = AffineForward(params, l, current);
    if (cache) cache->hidden.push_back(std::move(current));
    current = std::move(next);
  }
  return current;
}

}  // namespace

void CheckLabels(std::span<const int> labels, int classes, std::size_t rows) {
  if (rows == 0 || labels.empty()) throw ConfigError("empty batch");
  if (labels.size() != rows) {
    throw DataError("batch has " + std::to_string(rows) + " rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " at row " +
                      std::to_string(i) + " outside [0," +
                      std::to_string(classes) + ")");
    }
  }
}

PredictionVector Forward(const ModelParams& params, std::span<const double> x) {
  CheckInputWidth(params, x.size());
  Matrix row(1, x.size());
  std::copy(x.begin(), x.end(), row.row(0).begin());
  Matrix probs = PredictBatch(params, row);
  auto r = probs.row(0);
  return {std::vector<double>(r.begin(), r.end())};
}

Matrix PredictBatch(const ModelParams& params, const Matrix& x) {
  Matrix out = Logits(params, x, nullptr);
  SoftmaxRowsInPlace(out);
  return out;
}

ForwardCache ForwardWithCache(const ModelParams& params, const Matrix& x) {
  ForwardCache cache;
  cache.hidden.reserve(params.num_layers() - 1);
  cache.probs = Logits(params, x, &cache);
  SoftmaxRowsInPlace(cache.probs);
  return cache;
}

Gradient Backprop(const ModelParams& params, const Matrix& x,
                  const ForwardCache& cache, const Matrix& dlogits,
                  Matrix* input_grad) {
  Gradient grad = Gradient::ZerosLike(params);
  const auto& dims = params.layer_dims();
  const int layers = params.num_layers();
  Matrix delta = dlogits;
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix& in = l == 0 ? x : cache.hidden[l - 1];
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    double* gw = grad.values.data() + params.weight_offset(l);
    double* gb = grad.values.data() + params.bias_offset(l);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const double* d = delta.row(i).data();
      const double* a = in.row(i).data();
      for (std::size_t j = 0; j < fan_out; ++j) gb[j] += d[j];
      for (std::size_t k = 0; k < fan_in; ++k) {
        const double ak = a[k];
        if (ak == 0.0) continue;
        double* g = gw + k * fan_out;
        for (std::size_t j = 0; j < fan_out; ++j) g[j] += ak * d[j];
      }
    }
    if (l == 0 && input_grad == nullptr) break;
    // delta_prev = delta * W^T, masked by the ReLU derivative below layer 0.
    const double* w = params.values().data() + params.weight_offset(l);
    Matrix prev(delta.rows(), fan_in);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const double* d = delta.row(i).data();
      const double* a = in.row(i).data();
      double* p = prev.row(i).data();
      for (std::size_t k = 0; k < fan_in; ++k) {
        if (l > 0 && a[k] <= 0.0) continue;
        const double* wk = w + k * fan_out;
        double s = 0.0;
        for (std::size_t j = 0; j < fan_out; ++j) s += wk[j] * d[j];
        p[k] = s;
      }
    }
    if (l == 0) {
      *input_grad = std::move(prev);
      break;
    }
    delta = std::move(prev);
  }
  return grad;
}

std::vector<double> PerExampleLoss(const Matrix& probs, std::span<const int> labels) {
  std::vector<double> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    out[i] = -std::log(std::max(probs(i, labels[i]), kProbFloor));
  }
  return out;
}

LossAndGrad CrossEntropyLossAndGrad(const ModelParams& params, const Matrix& x,
                                    std::span<const int> labels) {
  CheckLabels(labels, params.num_classes(), x.rows());
  ForwardCache cache = ForwardWithCache(params, x);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  double loss = 0.0;
  Matrix dlogits = cache.probs;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    loss += -std::log(std::max(cache.probs(i, labels[i]), kProbFloor));
    dlogits(i, labels[i]) -= 1.0;
  }
  for (double& v : dlogits.data()) v *= inv_n;
  return {loss * inv_n, Backprop(params, x, cache, dlogits)};
}

LossAndGrad SoftCrossEntropyLossAndGrad(const ModelParams& params,
                                        const Matrix& x, const Matrix& targets) {
  if (x.rows() == 0) throw ConfigError("empty batch");
  if (targets.rows() != x.rows() ||
      targets.cols() != static_cast<std::size_t>(params.num_classes())) {
    throw NumericError("soft targets must be rows x classes");
  }
  ForwardCache cache = ForwardWithCache(params, x);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  double loss = 0.0;
  Matrix dlogits(x.rows(), targets.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mass = 0.0;
    for (std::size_t k = 0; k < targets.cols(); ++k) {
      const double t = targets(i, k);
      mass += t;
      if (t != 0.0) loss -= t * std::log(std::max(cache.probs(i, k), kProbFloor));
    }
    for (std::size_t k = 0; k < targets.cols(); ++k) {
      dlogits(i, k) = (mass * cache.probs(i, k) - targets(i, k)) * inv_n;
    }
  }
  return {loss * inv_n, Backprop(params, x, cache, dlogits)};
}

Matrix LossInputGradient(const ModelParams& params, const Matrix& x,
                         std::span<const int> labels) {
  CheckLabels(labels, params.num_classes(), x.rows());
  ForwardCache cache = ForwardWithCache(params, x);
  Matrix dlogits = cache.probs;
  for (std::size_t i = 0; i < x.rows(); ++i) dlogits(i, labels[i]) -= 1.0;
  Matrix input_grad;
  Backprop(params, x, cache, dlogits, &input_grad);
  return input_grad;
}

double Accuracy(const Matrix& probs, std::span<const int> labels) {
  if (probs.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto r = probs.row(i);
    const auto best = std::max_element(r.begin(), r.end()) - r.begin();
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

}  // namespace mistlab
