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

#ifndef MISTLAB_TESTS_TEST_UTIL_H_
#define MISTLAB_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "mistlab/error.h"
#include "mistlab/matrix.h"
#include "mistlab/params.h"
#include "mistlab/rng.h"

namespace mistlab::testing {

inline Matrix RandomMatrix(std::size_t rows, std::size_t cols, Rng& rng,
                           double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

inline std::vector<int> RandomLabels(std::size_t n, int classes, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> labels(n);
  for (int& y : labels) y = pick(rng);
  return labels;
}

// Small random MLP with 0-2 hidden layers; at most ~5,000 parameters.
inline ModelParams RandomModel(Rng& rng, int input = 0, int classes = 0) {
  std::uniform_int_distribution<int> in_dist(2, 12), hid_dist(3, 24), depth(0, 2),
      cls_dist(2, 8);
  std::vector<int> dims = {input ? input : in_dist(rng)};
  const int layers = depth(rng);
  for (int l = 0; l < layers; ++l) dims.push_back(hid_dist(rng));
  dims.push_back(classes ? classes : cls_dist(rng));
  // Perturb biases too so that no ReLU sits exactly at zero.
  ModelParams base = ModelParams::GlorotUniform(dims, rng());
  std::vector<double> v(base.values().begin(), base.values().end());
  std::normal_distribution<double> noise(0.0, 0.1);
  for (double& x : v) x += noise(rng);
  return ModelParams(dims, v);
}

// Central differences of f over every parameter.
inline std::vector<double> NumericGradient(const ModelParams& p,
                                           const std::function<double(const ModelParams&)>& f,
                                           double h = 1e-5) {
  std::vector<double> values(p.values().begin(), p.values().end());
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double up = f(ModelParams(p.layer_dims(), values));
    values[i] = keep - h;
    const double down = f(ModelParams(p.layer_dims(), values));
    values[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// max_i |a_i - b_i| / max(1, |a|_inf, |b|_inf)
inline double RelativeError(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

// Runs f and returns the kind of the mistlab::Error it throws; nullopt when it
// throws nothing.
template <typename F>
std::optional<ErrorKind> ThrownKind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace mistlab::testing

#define EXPECT_ERROR_KIND(statement, error_kind)                                     \
  EXPECT_EQ(::mistlab::testing::ThrownKind([&] { (void)(statement); }),             \
            std::optional<::mistlab::ErrorKind>(error_kind))

#endif  // MISTLAB_TESTS_TEST_UTIL_H_
