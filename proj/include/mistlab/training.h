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

#ifndef MISTLAB_TRAINING_H_
#define MISTLAB_TRAINING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mistlab/dataset.h"
#include "mistlab/mlp.h"
#include "mistlab/params.h"

namespace mistlab {

// Distance used by the cross-difference loss.
enum class XdiffVariant { kL1, kL2, kKL };

std::string_view ToString(XdiffVariant variant);
XdiffVariant ParseXdiffVariant(std::string_view name);

// Training recipe shared by the baseline and MIST. With submodels == 1 and
// lambda == 0 it describes plain minibatch SGD.
struct MistConfig {
  std::vector<int> hidden = {64};
  int submodels = 1;            // C
  int epochs = 10;              // E
  std::optional<int> t1;        // Phase-1 steps; default ceil(|D^c| / batch)
  std::optional<int> t2;        // Phase-2 steps; default T1
  double lambda = 0.0;          // cross-difference weight
  XdiffVariant variant = XdiffVariant::kL1;
  int batch_size = 32;
  double lr = 0.1;
  std::optional<double> phase2_lr;    // defaults to lr
  std::optional<double> mixup_alpha;  // Phase 1 only
  bool phase2_include_ce = false;
  double lr_decay = 1.0;        // step decay factor ...
  int lr_decay_every = 0;       // ... applied every this many epochs (0: off)
  std::uint64_t seed = 0;
  int threads = 1;
  bool record_metrics = true;

  void Validate() const;
  std::vector<int> LayerDims(int input_dim, int classes) const;
};

struct EpochStats {
  int epoch = 0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;  // NaN without a validation set
  double ce_loss = 0.0;              // mean CE of the aggregate on training data
  double xdiff_loss = 0.0;           // mean per-instance xdiff after Phase 2
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  ModelParams final_params;
  // The C submodels averaged into final_params in the last epoch (MIST only).
  std::vector<ModelParams> final_submodels;
};

// Cross-difference loss of `w` on (x, labels) against the mean prediction of
// frozen peers. L1/L2 compare the true-class probability; KL is
// KL(peer mean || F(x; w)) over the full vector. The loss is the plain sum
// over rows; the gradient is taken w.r.t. w only.
LossAndGrad XdiffLossAndGrad(const ModelParams& w, const Matrix& x,
                             std::span<const int> labels,
                             std::span<const ModelParams> peers,
                             XdiffVariant variant);

// Same, with the peer mean prediction (rows x classes) precomputed.
LossAndGrad XdiffLossAndGradWithTargets(const ModelParams& w, const Matrix& x,
                                        std::span<const int> labels,
                                        const Matrix& peer_mean,
                                        XdiffVariant variant);

// Per-row mean of peer predictions. Computed as p_1 + sum_i (p_i - p_1) / n so
// that identical peers reproduce their prediction bit for bit.
Matrix PeerMeanPredictions(std::span<const ModelParams> peers, const Matrix& x);
Matrix MeanOfPredictions(std::span<const Matrix> predictions);

// Per-row cross-difference value without gradient.
std::vector<double> XdiffPerRow(const Matrix& probs, std::span<const int> labels,
                                const Matrix& peer_mean, XdiffVariant variant);

// ceil(subset_size / batch_size): one pass over the subset.
int DefaultT1(std::size_t subset_size, int batch_size);

// Membership-Invariant Subspace Training. Each epoch repartitions the data
// into C subsets, runs Phase 1 (T1 CE steps per subset from the current
// aggregate), Phase 2 (T2 steps of (lambda/|batch|) xdiff against frozen
// Phase-1 peers) and averages the C submodels.
TrainLog MistTrain(const LabeledDataset& data, const LabeledDataset* validation,
                   const MistConfig& cfg);

// Minibatch SGD over the whole training set; shares the epoch shuffle and
// step schedule of MistTrain with C = 1.
TrainLog BaselineTrain(const LabeledDataset& data, const LabeledDataset* validation,
                       const MistConfig& cfg);

// BaselineTrain when C == 1 and lambda == 0, MistTrain otherwise.
TrainLog TrainModel(const LabeledDataset& data, const LabeledDataset* validation,
                    const MistConfig& cfg);

}  // namespace mistlab

#endif  // MISTLAB_TRAINING_H_
