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

// mistlab: membership-inference defense experiments from the command line.
//
//   mistlab train  --config exp.cfg [--seed N] [--threads N] [--out DIR]
//                  [--sweep-C 2..6] [--tune-lambda] [--f64]
//   mistlab shadow --config exp.cfg [--f64]
//   mistlab attack --config exp.cfg
//   mistlab ablate --config exp.cfg
//   mistlab oracle --config exp.cfg
//   mistlab gen-data --config exp.cfg
//   mistlab report a.csv b.csv -o merged.csv

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mistlab/config.h"
#include "mistlab/error.h"
#include "mistlab/experiment.h"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

void AddCommon(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment config (key = value)")->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--threads", flags.threads, "worker threads; results do not depend on the count");
  cmd->add_option("--out", flags.out, "override output_dir");
}

mistlab::ExperimentConfig Resolve(const CommonFlags& flags) {
  mistlab::ExperimentConfig cfg = mistlab::LoadConfigFile(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.out) cfg.output_dir = *flags.out;
  cfg.Validate();
  return cfg;
}

std::pair<int, int> ParseRange(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const int c = std::stoi(text);
      return {c, c};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw mistlab::ConfigError("--sweep-C expects a..b, got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference defense experiments"};
  app.require_subcommand(1);

  CommonFlags common;
  bool f64 = false;
  bool tune_lambda = false;
  std::string sweep;

  auto* gen = app.add_subcommand("gen-data", "write the configured dataset as CSV");
  auto* train = app.add_subcommand("train", "train the target model");
  auto* shadow = app.add_subcommand("shadow", "train shadow models and write scores");
  auto* attack = app.add_subcommand("attack", "run the configured attacks");
  auto* ablate = app.add_subcommand("ablate", "no-defense / phase1-only / phase1+2 arms");
  auto* oracle = app.add_subcommand("oracle", "leave-one-out invariance oracle");
  auto* report = app.add_subcommand("report", "merge report CSV files");
  for (auto* cmd : {gen, train, shadow, attack, ablate, oracle}) AddCommon(cmd, common);
  train->add_option("--sweep-C", sweep, "train each C in a..b, keep the best on validation");
  train->add_flag("--tune-lambda", tune_lambda,
                  "largest lambda in tune.lambda_grid within the accuracy budget");
  for (auto* cmd : {train, shadow}) {
    cmd->add_flag("--f64", f64, "store 64-bit parameters in snapshots");
  }
  std::vector<std::string> inputs;
  std::string merged = "report.csv";
  report->add_option("inputs", inputs, "CSV files")->required();
  report->add_option("-o,--output", merged, "merged CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      mistlab::MergeReports(paths, merged);
      return 0;
    }
    const mistlab::ExperimentConfig cfg = Resolve(common);
    mistlab::CommandOptions opts;
    opts.width = f64 ? mistlab::SnapshotWidth::kF64 : mistlab::SnapshotWidth::kF32;
    opts.tune_lambda = tune_lambda;
    if (!sweep.empty()) opts.sweep_submodels = ParseRange(sweep);
    if (gen->parsed()) mistlab::CmdGenData(cfg, std::clog);
    if (train->parsed()) mistlab::CmdTrain(cfg, opts, std::clog);
    if (shadow->parsed()) mistlab::CmdShadow(cfg, opts, std::clog);
    if (attack->parsed()) mistlab::CmdAttack(cfg, std::clog);
    if (ablate->parsed()) mistlab::CmdAblate(cfg, std::clog);
    if (oracle->parsed()) mistlab::CmdOracle(cfg, std::clog);
  } catch (const mistlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mistlab::ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
