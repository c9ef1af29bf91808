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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mistlab/attacks.h"
#include "mistlab/config.h"
#include "mistlab/error.h"
#include "mistlab/experiment.h"
#include "mistlab/metrics.h"
#include "mistlab/snapshot.h"
#include "mistlab/training.h"

namespace py = pybind11;

namespace mistlab {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix ToMatrix(const Array& a) {
  if (a.ndim() != 2) throw ConfigError("features must be a 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array FromMatrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

template <typename T>
py::array_t<T> FromVector(const std::vector<T>& v) {
  py::array_t<T> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

LabeledDataset ToDataset(const Array& features, const IntArray& labels, int classes) {
  Matrix x = ToMatrix(features);
  std::vector<int> y(labels.data(), labels.data() + labels.size());
  std::vector<InstanceId> ids(y.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<InstanceId>(i);
  return LabeledDataset(std::move(x), std::move(y), std::move(ids), classes);
}

ExperimentConfig LoadWithOverrides(const std::filesystem::path& config,
                                   std::optional<std::filesystem::path> out,
                                   std::optional<std::uint64_t> seed,
                                   std::optional<int> threads) {
  ExperimentConfig cfg = LoadConfigFile(config);
  if (out) cfg.output_dir = *out;
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  cfg.Validate();
  return cfg;
}

}  // namespace
}  // namespace mistlab

PYBIND11_MODULE(_mistlab, m) {
  using namespace mistlab;
  m.doc() = "Membership-invariant subspace training and membership inference attacks";

  static py::exception<Error> error(m, "MistlabError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("kind") = e.kind() == ErrorKind::kConfig ? "config"
                         : e.kind() == ErrorKind::kData ? "data"
                                                        : "numeric";
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<ModelParams>(m, "Model")
      .def(py::init([](std::vector<int> dims, const Array& values) {
             return ModelParams(std::move(dims),
                                std::vector<double>(values.data(), values.data() + values.size()));
           }),
           py::arg("layer_dims"), py::arg("values"))
      .def_property_readonly("layer_dims", &ModelParams::layer_dims)
      .def_property_readonly("values", [](const ModelParams& p) {
        return FromVector(std::vector<double>(p.values().begin(), p.values().end()));
      })
      .def("predict", [](const ModelParams& p, const Array& x) {
        return FromMatrix(PredictBatch(p, ToMatrix(x)));
      }, py::arg("features"))
      .def("checksum", &ModelParams::Checksum)
      .def("save", [](const ModelParams& p, const std::filesystem::path& path, bool f64) {
        SaveSnapshotFile(p, path, f64 ? SnapshotWidth::kF64 : SnapshotWidth::kF32);
      }, py::arg("path"), py::arg("f64") = false)
      .def_static("load", &LoadSnapshotFile, py::arg("path"))
      .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; });

  m.def("generate_synthetic",
        [](int classes, int dim, int per_class, double spread, double center_scale,
           std::uint64_t seed) {
          const LabeledDataset d =
              GenerateSynthetic({classes, dim, per_class, spread, center_scale, seed});
          return py::make_tuple(FromMatrix(d.features()), FromVector(d.labels()));
        },
        py::arg("classes"), py::arg("dim"), py::arg("per_class"),
        py::arg("cluster_spread") = 1.0, py::arg("center_scale") = 1.0, py::arg("seed") = 0);

  m.def("train",
        [](const Array& features, const IntArray& labels, int classes, std::vector<int> hidden,
           int submodels, double lam, const std::string& variant, int epochs, int batch_size,
           double lr, std::optional<double> phase2_lr, std::optional<double> mixup_alpha,
           std::uint64_t seed, int threads) {
          MistConfig cfg;
          cfg.hidden = std::move(hidden);
          cfg.submodels = submodels;
          cfg.lambda = lam;
          cfg.variant = ParseXdiffVariant(variant);
          cfg.epochs = epochs;
          cfg.batch_size = batch_size;
          cfg.lr = lr;
          cfg.phase2_lr = phase2_lr;
          cfg.mixup_alpha = mixup_alpha;
          cfg.seed = seed;
          cfg.threads = threads;
          const LabeledDataset data = ToDataset(features, labels, classes);
          py::gil_scoped_release release;
          return TrainModel(data, nullptr, cfg).final_params;
        },
        py::arg("features"), py::arg("labels"), py::arg("classes"),
        py::arg("hidden") = std::vector<int>{64}, py::arg("submodels") = 1,
        py::arg("lam") = 0.0, py::arg("variant") = "L1", py::arg("epochs") = 10,
        py::arg("batch_size") = 32, py::arg("lr") = 0.1, py::arg("phase2_lr") = py::none(),
        py::arg("mixup_alpha") = py::none(), py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("roc_auc",
        [](const Array& scores, const std::vector<bool>& is_member) {
          return Auc(Roc(std::span<const double>(scores.data(), scores.size()), is_member));
        },
        py::arg("scores"), py::arg("is_member"));
  m.def("tpr_at_fpr",
        [](const Array& scores, const std::vector<bool>& is_member, double fpr) {
          const TprAtFpr t = TprAtFprTarget(
              Roc(std::span<const double>(scores.data(), scores.size()), is_member), fpr);
          return py::make_tuple(t.tpr, t.realized_fpr);
        },
        py::arg("scores"), py::arg("is_member"), py::arg("fpr"));
  m.def("lira_log_ratio",
        [](double s, double mu_in, double sigma_in, double mu_out, double sigma_out) {
          return LiraLogRatio(s, {mu_in, sigma_in, mu_out, sigma_out});
        },
        py::arg("score"), py::arg("mu_in"), py::arg("sigma_in"), py::arg("mu_out"),
        py::arg("sigma_out"));
  m.def("non_overlap",
        [](double mu_in, double sigma_in, double mu_out, double sigma_out) {
          return NonOverlap({mu_in, sigma_in, mu_out, sigma_out});
        },
        py::arg("mu_in"), py::arg("sigma_in"), py::arg("mu_out"), py::arg("sigma_out"));

  m.def("run_command",
        [](const std::string& command, const std::filesystem::path& config,
           std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed,
           std::optional<int> threads, bool f64) {
          const ExperimentConfig cfg = LoadWithOverrides(config, out, seed, threads);
          CommandOptions opts;
          if (f64) opts.width = SnapshotWidth::kF64;
          std::ostringstream log;
          {
            py::gil_scoped_release release;
            if (command == "gen-data") {
              CmdGenData(cfg, log);
            } else if (command == "train") {
              CmdTrain(cfg, opts, log);
            } else if (command == "shadow") {
              CmdShadow(cfg, opts, log);
            } else if (command == "attack") {
              CmdAttack(cfg, log);
            } else if (command == "ablate") {
              CmdAblate(cfg, log);
            } else if (command == "oracle") {
              CmdOracle(cfg, log);
            } else {
              throw ConfigError("unknown command '" + command + "'");
            }
          }
          return py::make_tuple(ExperimentDir(cfg), log.str());
        },
        py::arg("command"), py::arg("config"), py::arg("out") = py::none(),
        py::arg("seed") = py::none(), py::arg("threads") = py::none(), py::arg("f64") = false);
}
