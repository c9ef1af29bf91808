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

#ifndef MISTLAB_MLP_H_
#define MISTLAB_MLP_H_

#include <span>
#include <vector>

#include "mistlab/matrix.h"
#include "mistlab/params.h"

namespace mistlab {

// Probabilities are clamped to this before taking logs.
inline constexpr double kProbFloor = 1e-12;

// F(x; theta): per-class probabilities, nonnegative and summing to 1.
struct PredictionVector {
  std::vector<double> probs;
};

// Hidden activations are ReLU, the output is a max-shifted softmax.
PredictionVector Forward(const ModelParams& params, std::span<const double> x);

// Row-wise Forward over a batch. Each output row depends only on the matching
// input row and is bitwise identical to Forward on that row alone.
Matrix PredictBatch(const ModelParams& params, const Matrix& x);

// Intermediate values kept for backpropagation.
struct ForwardCache {
  std::vector<Matrix> hidden;  // post-ReLU output of every hidden layer
  Matrix probs;
};

ForwardCache ForwardWithCache(const ModelParams& params, const Matrix& x);

// Backpropagates dLoss/dlogits (rows x classes) through the network. When
// `input_grad` is non-null it receives dLoss/dx.
Gradient Backprop(const ModelParams& params, const Matrix& x,
                  const ForwardCache& cache, const Matrix& dlogits,
                  Matrix* input_grad = nullptr);

struct LossAndGrad {
  double loss = 0.0;
  Gradient grad;
};

// Mean of -log F(x; theta)_y over the batch and its analytic gradient.
LossAndGrad CrossEntropyLossAndGrad(const ModelParams& params, const Matrix& x,
                                    std::span<const int> labels);

// Mean of -sum_k t_k log p_k for probability-vector targets (mixup labels).
LossAndGrad SoftCrossEntropyLossAndGrad(const ModelParams& params,
                                        const Matrix& x, const Matrix& targets);

// -log max(p_y, floor) per row.
std::vector<double> PerExampleLoss(const Matrix& probs, std::span<const int> labels);

// Row i holds d(-log p_{y_i}(x_i))/dx_i.
Matrix LossInputGradient(const ModelParams& params, const Matrix& x,
                         std::span<const int> labels);

// Fraction of rows whose argmax equals the label.
double Accuracy(const Matrix& probs, std::span<const int> labels);

// Throws when a label is outside [0, classes) or the batch is empty.
void CheckLabels(std::span<const int> labels, int classes, std::size_t rows);

}  // namespace mistlab

#endif  // MISTLAB_MLP_H_
