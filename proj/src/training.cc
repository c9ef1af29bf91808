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

#include "mistlab/training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mistlab/error.h"
#include "mistlab/parallel.h"
#include "mistlab/rng.h"

namespace mistlab {
namespace {

constexpr std::uint64_t kInitTag = NameTag("init");
constexpr std::uint64_t kPartitionTag = NameTag("partition");
constexpr std::uint64_t kPhase1Tag = NameTag("phase1");

double EpochLearningRate(const MistConfig& cfg, double base, int epoch) {
  if (cfg.lr_decay_every <= 0 || cfg.lr_decay == 1.0) return base;
  const int drops = (epoch - 1) / cfg.lr_decay_every;
  return base * std::pow(cfg.lr_decay, drops);
}

std::vector<std::size_t> Positions(const LabeledDataset& data,
                                   std::span<const InstanceId> ids) {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (InstanceId id : ids) out.push_back(data.PositionOf(id));
  return out;
}

// Batch t of a subset walked in fixed order, wrapping around when the step
// count exceeds one pass.
std::span<const std::size_t> BatchAt(std::span<const std::size_t> subset,
                                     int batch_size, int step) {
  const std::size_t b = static_cast<std::size_t>(batch_size);
  const std::size_t batches = (subset.size() + b - 1) / b;
  const std::size_t start = (static_cast<std::size_t>(step) % batches) * b;
  return subset.subspan(start, std::min(b, subset.size() - start));
}

std::vector<int> LabelsAt(const LabeledDataset& data,
                          std::span<const std::size_t> positions) {
  std::vector<int> labels;
  labels.reserve(positions.size());
  for (std::size_t p : positions) labels.push_back(data.labels()[p]);
  return labels;
}

// Phase 1: T1 minibatch CE steps on one subset, starting from `start`.
ModelParams LocalTraining(const ModelParams& start, const LabeledDataset& data,
                          std::span<const std::size_t> subset, int steps,
                          const MistConfig& cfg, double lr, Rng& rng) {
  ModelParams w = start;
  for (int t = 0; t < steps; ++t) {
    auto batch = BatchAt(subset, cfg.batch_size, t);
    Matrix x = GatherRows(data.features(), batch);
    std::vector<int> y = LabelsAt(data, batch);
    LossAndGrad lg;
    if (cfg.mixup_alpha && batch.size() >= 2) {
      MixedBatch mixed = MixupBatch(x, y, data.num_classes(), *cfg.mixup_alpha, rng);
      lg = SoftCrossEntropyLossAndGrad(w, mixed.features, mixed.soft_labels);
    } else {
      lg = CrossEntropyLossAndGrad(w, x, y);
    }
    w = SgdStep(w, lg.grad, lr);
  }
  return w;
}

// Phase 2: T2 steps minimizing (lambda/|batch|) xdiff against the frozen peer
// mean (optionally plus the batch CE).
ModelParams XdifferenceUpdate(const ModelParams& start, const LabeledDataset& data,
                              std::span<const std::size_t> subset,
                              const Matrix& subset_peer_mean, int steps,
                              const MistConfig& cfg, double lr) {
  ModelParams w = start;
  const std::size_t b = static_cast<std::size_t>(cfg.batch_size);
  for (int t = 0; t < steps; ++t) {
    auto batch = BatchAt(subset, cfg.batch_size, t);
    const std::size_t offset =
        (static_cast<std::size_t>(t) % ((subset.size() + b - 1) / b)) * b;
    Matrix x = GatherRows(data.features(), batch);
    std::vector<int> y = LabelsAt(data, batch);
    Matrix peer(batch.size(), subset_peer_mean.cols());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto src = subset_peer_mean.row(offset + i);
      std::copy(src.begin(), src.end(), peer.row(i).begin());
    }
    LossAndGrad lg = XdiffLossAndGradWithTargets(w, x, y, peer, cfg.variant);
    const double scale = cfg.lambda / static_cast<double>(batch.size());
    for (double& g : lg.grad.values) g *= scale;
    if (cfg.phase2_include_ce) {
      LossAndGrad ce = CrossEntropyLossAndGrad(w, x, y);
      for (std::size_t i = 0; i < ce.grad.values.size(); ++i) {
        lg.grad.values[i] += ce.grad.values[i];
      }
    }
    w = SgdStep(w, lg.grad, lr);
  }
  return w;
}

EpochStats AggregateStats(int epoch, const ModelParams& theta,
                          const LabeledDataset& data,
                          const LabeledDataset* validation) {
  EpochStats s;
  s.epoch = epoch;
  Matrix probs = PredictBatch(theta, data.features());
  s.train_accuracy = Accuracy(probs, data.labels());
  const auto losses = PerExampleLoss(probs, data.labels());
  s.ce_loss = std::accumulate(losses.begin(), losses.end(), 0.0) /
              static_cast<double>(losses.size());
  s.validation_accuracy = std::numeric_limits<double>::quiet_NaN();
  if (validation) {
    s.validation_accuracy =
        Accuracy(PredictBatch(theta, validation->features()), validation->labels());
  }
  s.xdiff_loss = std::numeric_limits<double>::quiet_NaN();
  return s;
}

void CheckTrainingInputs(const LabeledDataset& data, const LabeledDataset* validation,
                         const MistConfig& cfg) {
  cfg.Validate();
  if (static_cast<std::size_t>(cfg.submodels) > data.size()) {
    throw ConfigError("C=" + std::to_string(cfg.submodels) + " exceeds the " +
                      std::to_string(data.size()) + " training instances");
  }
  if (validation) {
    if (validation->dim() != data.dim()) {
      throw DataError("validation and training feature widths differ");
    }
    for (InstanceId id : validation->ids()) {
      if (data.Contains(id)) {
        throw DataError("instance " + std::to_string(id) +
                        " is in both the training and validation sets");
      }
    }
  }
}

}  // namespace

std::string_view ToString(XdiffVariant variant) {
  switch (variant) {
    case XdiffVariant::kL1:
      return "L1";
    case XdiffVariant::kL2:
      return "L2";
    case XdiffVariant::kKL:
      return "KL";
  }
  return "?";
}

XdiffVariant ParseXdiffVariant(std::string_view name) {
  if (name == "L1" || name == "l1") return XdiffVariant::kL1;
  if (name == "L2" || name == "l2") return XdiffVariant::kL2;
  if (name == "KL" || name == "kl") return XdiffVariant::kKL;
  throw ConfigError("unknown xdiff variant '" + std::string(name) +
                    "' (expected L1, L2 or KL)");
}

void MistConfig::Validate() const {
  if (submodels < 1) throw ConfigError("mist.C must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (t1 && *t1 < 0) throw ConfigError("mist.t1 must be >= 0");
  if (t2 && *t2 < 0) throw ConfigError("mist.t2 must be >= 0");
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ConfigError("mist.lambda must be finite and >= 0");
  }
  if (lambda > 0.0 && submodels < 2) {
    throw ConfigError("mist.lambda > 0 requires C >= 2 (Phase 2 needs peers)");
  }
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be > 0");
  if (phase2_lr && (!(*phase2_lr > 0.0) || !std::isfinite(*phase2_lr))) {
    throw ConfigError("mist.phase2_lr must be > 0");
  }
  if (mixup_alpha && (!(*mixup_alpha > 0.0) || !std::isfinite(*mixup_alpha))) {
    throw ConfigError("mixup.alpha must be > 0");
  }
  if (!(lr_decay > 0.0)) throw ConfigError("train.lr_decay must be > 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("model.hidden entries must be positive");
  }
}

std::vector<int> MistConfig::LayerDims(int input_dim, int classes) const {
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(classes);
  return dims;
}

Matrix MeanOfPredictions(std::span<const Matrix> predictions) {
  if (predictions.empty()) throw ConfigError("need at least one peer");
  const Matrix& first = predictions.front();
  Matrix sum(first.rows(), first.cols());
  for (const Matrix& p : predictions.subspan(1)) {
    if (p.rows() != first.rows() || p.cols() != first.cols()) {
      throw NumericError("peer prediction shapes differ");
    }
    auto s = sum.data();
    auto a = p.data();
    auto f = first.data();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += a[i] - f[i];
  }
  const double n = static_cast<double>(predictions.size());
  Matrix mean = first;
  auto m = mean.data();
  auto s = sum.data();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] += s[i] / n;
  return mean;
}

Matrix PeerMeanPredictions(std::span<const ModelParams> peers, const Matrix& x) {
  if (peers.empty()) throw ConfigError("xdiff needs at least one frozen peer");
  std::vector<Matrix> preds;
  preds.reserve(peers.size());
  for (const ModelParams& p : peers) {
    CheckSameLayout(peers.front().layer_dims(), p.layer_dims());
    preds.push_back(PredictBatch(p, x));
  }
  return MeanOfPredictions(preds);
}

std::vector<double> XdiffPerRow(const Matrix& probs, std::span<const int> labels,
                                const Matrix& peer_mean, XdiffVariant variant) {
  std::vector<double> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const int y = labels[i];
    switch (variant) {
      case XdiffVariant::kL1:
        out[i] = std::abs(probs(i, y) - peer_mean(i, y));
        break;
      case XdiffVariant::kL2: {
        const double d = probs(i, y) - peer_mean(i, y);
        out[i] = d * d;
        break;
      }
      case XdiffVariant::kKL: {
        double kl = 0.0;
        for (std::size_t k = 0; k < probs.cols(); ++k) {
          const double q = peer_mean(i, k);
          if (q <= 0.0) continue;
          kl += q * (std::log(std::max(q, kProbFloor)) -
                     std::log(std::max(probs(i, k), kProbFloor)));
        }
        out[i] = kl;
        break;
      }
    }
  }
  return out;
}

LossAndGrad XdiffLossAndGradWithTargets(const ModelParams& w, const Matrix& x,
                                        std::span<const int> labels,
                                        const Matrix& peer_mean,
                                        XdiffVariant variant) {
  CheckLabels(labels, w.num_classes(), x.rows());
  if (peer_mean.rows() != x.rows() ||
      peer_mean.cols() != static_cast<std::size_t>(w.num_classes())) {
    throw NumericError("peer mean must be rows x classes");
  }
  ForwardCache cache = ForwardWithCache(w, x);
  const Matrix& p = cache.probs;
  const auto per_row = XdiffPerRow(p, labels, peer_mean, variant);
  double loss = 0.0;
  for (double v : per_row) loss += v;

  Matrix dlogits(x.rows(), p.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int y = labels[i];
    if (variant == XdiffVariant::kKL) {
      double mass = 0.0;
      for (std::size_t k = 0; k < p.cols(); ++k) mass += peer_mean(i, k);
      for (std::size_t k = 0; k < p.cols(); ++k) {
        dlogits(i, k) = mass * p(i, k) - peer_mean(i, k);
      }
      continue;
    }
    const double d = p(i, y) - peer_mean(i, y);
    double outer = 0.0;  // dLoss/dp_y
    if (variant == XdiffVariant::kL1) {
      outer = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    } else {
      outer = 2.0 * d;
    }
    if (outer == 0.0) continue;
    // dp_y/dz_k = p_y (delta_ky - p_k)
    const double py = p(i, y);
    for (std::size_t k = 0; k < p.cols(); ++k) {
      dlogits(i, k) = -outer * py * p(i, k);
    }
    dlogits(i, y) += outer * py;
  }
  return {loss, Backprop(w, x, cache, dlogits)};
}

LossAndGrad XdiffLossAndGrad(const ModelParams& w, const Matrix& x,
                             std::span<const int> labels,
                             std::span<const ModelParams> peers,
                             XdiffVariant variant) {
  if (x.rows() == 0) throw ConfigError("xdiff needs a nonempty subset");
  for (const ModelParams& p : peers) CheckSameLayout(w.layer_dims(), p.layer_dims());
  return XdiffLossAndGradWithTargets(w, x, labels, PeerMeanPredictions(peers, x),
                                     variant);
}

int DefaultT1(std::size_t subset_size, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  const std::size_t b = static_cast<std::size_t>(batch_size);
  return static_cast<int>((subset_size + b - 1) / b);
}

TrainLog MistTrain(const LabeledDataset& data, const LabeledDataset* validation,
                   const MistConfig& cfg) {
  CheckTrainingInputs(data, validation, cfg);
  const int C = cfg.submodels;
  ModelParams theta = ModelParams::GlorotUniform(
      cfg.LayerDims(static_cast<int>(data.dim()), data.num_classes()),
      DeriveSeed(cfg.seed, {kInitTag}));
  TrainLog log{{}, theta, {}};

  for (int e = 1; e <= cfg.epochs; ++e) {
    PartitionPlan plan =
        Partition(data.ids(), C, DeriveSeed(cfg.seed, {kPartitionTag,
                                                       static_cast<std::uint64_t>(e)}),
                  e);
    std::vector<std::vector<std::size_t>> subsets;
    subsets.reserve(C);
    for (const auto& s : plan.subsets) subsets.push_back(Positions(data, s));
    const double lr1 = EpochLearningRate(cfg, cfg.lr, e);
    const double lr2 = EpochLearningRate(cfg, cfg.phase2_lr.value_or(cfg.lr), e);

    // Phase 1: exploring diverse models.
    std::vector<ModelParams> locals(C, theta);
    ParallelFor(C, cfg.threads, [&](std::size_t c) {
      Rng rng(DeriveSeed(cfg.seed, {static_cast<std::uint64_t>(e), c, kPhase1Tag}));
      const int steps = cfg.t1.value_or(DefaultT1(subsets[c].size(), cfg.batch_size));
      locals[c] = LocalTraining(theta, data, subsets[c], steps, cfg, lr1, rng);
    });

    // Phase 2: pull each submodel toward its frozen peers on its own subset.
    const bool phase2 = C >= 2 && cfg.lambda > 0.0;
    const bool need_peer_mean = C >= 2 && (phase2 || cfg.record_metrics);
    std::vector<Matrix> peer_means(C);
    std::vector<Matrix> subset_x(C);
    if (need_peer_mean) {
      ParallelFor(C, cfg.threads, [&](std::size_t c) {
        subset_x[c] = GatherRows(data.features(), subsets[c]);
        std::vector<Matrix> preds;
        preds.reserve(C - 1);
        for (int i = 0; i < C; ++i) {
          if (static_cast<std::size_t>(i) != c) {
            preds.push_back(PredictBatch(locals[i], subset_x[c]));
          }
        }
        peer_means[c] = MeanOfPredictions(preds);
      });
    }
    if (phase2) {
      std::vector<ModelParams> updated(locals);
      ParallelFor(C, cfg.threads, [&](std::size_t c) {
        const int t1 = cfg.t1.value_or(DefaultT1(subsets[c].size(), cfg.batch_size));
        const int steps = cfg.t2.value_or(t1);
        updated[c] = XdifferenceUpdate(locals[c], data, subsets[c], peer_means[c],
                                       steps, cfg, lr2);
      });
      locals = std::move(updated);
    }

    double xdiff_sum = 0.0;
    if (need_peer_mean && cfg.record_metrics) {
      for (int c = 0; c < C; ++c) {
        const auto per_row =
            XdiffPerRow(PredictBatch(locals[c], subset_x[c]),
                        LabelsAt(data, subsets[c]), peer_means[c], cfg.variant);
        for (double v : per_row) xdiff_sum += v;
      }
    }

    theta = AverageParams(locals);
    if (e == cfg.epochs) log.final_submodels = std::move(locals);
    if (cfg.record_metrics) {
      EpochStats s = AggregateStats(e, theta, data, validation);
      if (need_peer_mean) s.xdiff_loss = xdiff_sum / static_cast<double>(data.size());
      log.epochs.push_back(s);
    }
  }
  log.final_params = std::move(theta);
  return log;
}

TrainLog BaselineTrain(const LabeledDataset& data, const LabeledDataset* validation,
                       const MistConfig& cfg) {
  MistConfig base = cfg;
  base.submodels = 1;
  base.lambda = 0.0;
  CheckTrainingInputs(data, validation, base);
  ModelParams theta = ModelParams::GlorotUniform(
      base.LayerDims(static_cast<int>(data.dim()), data.num_classes()),
      DeriveSeed(base.seed, {kInitTag}));
  TrainLog log{{}, theta, {}};
  for (int e = 1; e <= base.epochs; ++e) {
    const auto order = KeyedOrder(
        data.ids(), DeriveSeed(base.seed, {kPartitionTag, static_cast<std::uint64_t>(e)}));
    const auto positions = Positions(data, order);
    Rng rng(DeriveSeed(base.seed, {static_cast<std::uint64_t>(e), 0, kPhase1Tag}));
    const int steps = base.t1.value_or(DefaultT1(positions.size(), base.batch_size));
    theta = LocalTraining(theta, data, positions, steps, base,
                          EpochLearningRate(base, base.lr, e), rng);
    if (base.record_metrics) log.epochs.push_back(AggregateStats(e, theta, data, validation));
  }
  log.final_params = std::move(theta);
  return log;
}

TrainLog TrainModel(const LabeledDataset& data, const LabeledDataset* validation,
                    const MistConfig& cfg) {
  if (cfg.submodels == 1 && cfg.lambda == 0.0) {
    return BaselineTrain(data, validation, cfg);
  }
  return MistTrain(data, validation, cfg);
}

}  // namespace mistlab
