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

#include "mistlab/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "mistlab/error.h"

namespace mistlab {
namespace {

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T v{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": cannot parse '" + value + "' as a number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw ConfigError(key + ": value must be finite");
  }
  return v;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string FormatReal(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

template <typename T, typename F>
std::string JoinList(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += format(items[i]);
  }
  return out;
}

// Re-raises a parse error with the key's line in the source.
template <typename F>
void WithContext(const std::string& source, int line, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw Error(e.kind(), source + ":" + std::to_string(line) + ": " + e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key,
                                  const std::string& value)>;

const std::map<std::string, Setter>& Setters() {
  static const auto* setters = new std::map<std::string, Setter>{
      {"experiment",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v.empty() || v.find_first_of("/\\") != std::string::npos) {
           throw ConfigError(k + ": must be a non-empty name without path separators");
         }
         c.experiment = v;
       }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = ParseNumber<std::uint64_t>(k, v); }},
      {"threads", [](auto& c, auto& k, auto& v) { c.threads = ParseNumber<int>(k, v); }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"dataset.source",
       [](auto& c, auto& k, auto& v) {
         if (v == "synthetic") {
           c.dataset.source = DatasetConfig::Source::kSynthetic;
         } else if (v == "csv") {
           c.dataset.source = DatasetConfig::Source::kCsv;
         } else {
           throw ConfigError(k + ": expected synthetic or csv, got '" + v + "'");
         }
       }},
      {"dataset.path", [](auto& c, auto&, auto& v) { c.dataset.path = v; }},
      {"dataset.label_column", [](auto& c, auto&, auto& v) { c.dataset.label_column = v; }},
      {"dataset.classes",
       [](auto& c, auto& k, auto& v) {
         const int n = ParseNumber<int>(k, v);
         c.dataset.classes = n;
         c.dataset.synthetic.classes = n;
       }},
      {"dataset.dim",
       [](auto& c, auto& k, auto& v) { c.dataset.synthetic.dim = ParseNumber<int>(k, v); }},
      {"dataset.per_class",
       [](auto& c, auto& k, auto& v) {
         c.dataset.synthetic.per_class = ParseNumber<int>(k, v);
       }},
      {"dataset.cluster_spread",
       [](auto& c, auto& k, auto& v) {
         c.dataset.synthetic.cluster_spread = ParseNumber<double>(k, v);
       }},
      {"dataset.center_scale",
       [](auto& c, auto& k, auto& v) {
         c.dataset.synthetic.center_scale = ParseNumber<double>(k, v);
       }},
      {"dataset.seed",
       [](auto& c, auto& k, auto& v) {
         c.dataset.synthetic.seed = ParseNumber<std::uint64_t>(k, v);
       }},
      {"dataset.integer_features",
       [](auto& c, auto& k, auto& v) {
         if (v != "strict" && v != "off") {
           throw ConfigError(k + ": expected strict or off, got '" + v + "'");
         }
         c.dataset.strict_integer_features = v == "strict";
       }},
      {"split.members",
       [](auto& c, auto& k, auto& v) { c.split.members = ParseNumber<std::size_t>(k, v); }},
      {"split.nonmembers",
       [](auto& c, auto& k, auto& v) {
         c.split.nonmembers = ParseNumber<std::size_t>(k, v);
       }},
      {"split.validation",
       [](auto& c, auto& k, auto& v) {
         c.split.validation = ParseNumber<std::size_t>(k, v);
       }},
      {"split.test",
       [](auto& c, auto& k, auto& v) { c.split.test = ParseNumber<std::size_t>(k, v); }},
      {"defense", [](auto& c, auto&, auto& v) { c.defense = ParseDefense(v); }},
      {"model.hidden",
       [](auto& c, auto& k, auto& v) {
         c.recipe.hidden.clear();
         for (const auto& item : SplitList(v)) {
           c.recipe.hidden.push_back(ParseNumber<int>(k, item));
         }
       }},
      {"train.epochs",
       [](auto& c, auto& k, auto& v) { c.recipe.epochs = ParseNumber<int>(k, v); }},
      {"train.batch_size",
       [](auto& c, auto& k, auto& v) { c.recipe.batch_size = ParseNumber<int>(k, v); }},
      {"train.lr", [](auto& c, auto& k, auto& v) { c.recipe.lr = ParseNumber<double>(k, v); }},
      {"train.lr_decay",
       [](auto& c, auto& k, auto& v) { c.recipe.lr_decay = ParseNumber<double>(k, v); }},
      {"train.lr_decay_every",
       [](auto& c, auto& k, auto& v) { c.recipe.lr_decay_every = ParseNumber<int>(k, v); }},
      {"mist.C",
       [](auto& c, auto& k, auto& v) { c.recipe.submodels = ParseNumber<int>(k, v); }},
      {"mist.lambda",
       [](auto& c, auto& k, auto& v) { c.recipe.lambda = ParseNumber<double>(k, v); }},
      {"mist.variant", [](auto& c, auto&, auto& v) { c.recipe.variant = ParseXdiffVariant(v); }},
      {"mist.t1", [](auto& c, auto& k, auto& v) { c.recipe.t1 = ParseNumber<int>(k, v); }},
      {"mist.t2", [](auto& c, auto& k, auto& v) { c.recipe.t2 = ParseNumber<int>(k, v); }},
      {"mist.phase2_lr",
       [](auto& c, auto& k, auto& v) { c.recipe.phase2_lr = ParseNumber<double>(k, v); }},
      {"mist.phase2_include_ce",
       [](auto& c, auto& k, auto& v) { c.recipe.phase2_include_ce = ParseBool(k, v); }},
      {"mixup.alpha",
       [](auto& c, auto& k, auto& v) { c.mixup_alpha = ParseNumber<double>(k, v); }},
      {"shadow.count", [](auto& c, auto& k, auto& v) { c.shadows = ParseNumber<int>(k, v); }},
      {"shadow.split",
       [](auto& c, auto&, auto& v) { c.shadow_split = ParseShadowSplitMode(v); }},
      {"shadow.score", [](auto& c, auto&, auto& v) { c.score_kind = ParseScoreKind(v); }},
      {"attacks",
       [](auto& c, auto& k, auto& v) {
         c.attacks.clear();
         for (const auto& item : SplitList(v)) {
           const AttackKind a = ParseAttackKind(item);
           if (std::find(c.attacks.begin(), c.attacks.end(), a) != c.attacks.end()) {
             throw ConfigError(k + ": attack '" + item + "' listed twice");
           }
           c.attacks.push_back(a);
         }
       }},
      {"fpr_targets",
       [](auto& c, auto& k, auto& v) {
         c.fpr_targets.clear();
         for (const auto& item : SplitList(v)) {
           c.fpr_targets.push_back(ParseNumber<double>(k, item));
         }
       }},
      {"perturb.sigma_scale",
       [](auto& c, auto& k, auto& v) { c.perturb_sigma_scale = ParseNumber<double>(k, v); }},
      {"perturb.samples",
       [](auto& c, auto& k, auto& v) { c.perturb_samples = ParseNumber<int>(k, v); }},
      {"canary.count",
       [](auto& c, auto& k, auto& v) { c.canary_count = ParseNumber<int>(k, v); }},
      {"canary.steps",
       [](auto& c, auto& k, auto& v) { c.canary_steps = ParseNumber<int>(k, v); }},
      {"canary.step_scale",
       [](auto& c, auto& k, auto& v) { c.canary_step_scale = ParseNumber<double>(k, v); }},
      {"canary.noise_scale",
       [](auto& c, auto& k, auto& v) { c.canary_noise_scale = ParseNumber<double>(k, v); }},
      {"canary.eval_limit",
       [](auto& c, auto& k, auto& v) {
         c.canary_eval_limit = ParseNumber<std::size_t>(k, v);
       }},
      {"classnn.hidden",
       [](auto& c, auto& k, auto& v) {
         c.classnn.hidden.clear();
         for (const auto& item : SplitList(v)) {
           c.classnn.hidden.push_back(ParseNumber<int>(k, item));
         }
       }},
      {"classnn.epochs",
       [](auto& c, auto& k, auto& v) { c.classnn.epochs = ParseNumber<int>(k, v); }},
      {"classnn.lr", [](auto& c, auto& k, auto& v) { c.classnn.lr = ParseNumber<double>(k, v); }},
      {"classnn.batch_size",
       [](auto& c, auto& k, auto& v) { c.classnn.batch_size = ParseNumber<int>(k, v); }},
      {"classnn.min_rows",
       [](auto& c, auto& k, auto& v) {
         c.classnn.min_rows = ParseNumber<std::size_t>(k, v);
       }},
      {"tune.lambda_grid",
       [](auto& c, auto& k, auto& v) {
         c.lambda_grid.clear();
         for (const auto& item : SplitList(v)) {
           c.lambda_grid.push_back(ParseNumber<double>(k, item));
         }
       }},
      {"tune.max_accuracy_drop",
       [](auto& c, auto& k, auto& v) { c.max_accuracy_drop = ParseNumber<double>(k, v); }},
      {"ablate.variants",
       [](auto& c, auto&, auto& v) {
         c.ablate_variants.clear();
         for (const auto& item : SplitList(v)) {
           c.ablate_variants.push_back(ParseXdiffVariant(item));
         }
       }},
      {"oracle.removals",
       [](auto& c, auto& k, auto& v) { c.oracle_removals = ParseNumber<int>(k, v); }},
      {"oracle.lambdas",
       [](auto& c, auto& k, auto& v) {
         c.oracle_lambdas.clear();
         for (const auto& item : SplitList(v)) {
           c.oracle_lambdas.push_back(ParseNumber<double>(k, item));
         }
       }},
  };
  return *setters;
}

}  // namespace

std::string_view ToString(Defense defense) {
  switch (defense) {
    case Defense::kNone:
      return "none";
    case Defense::kMist:
      return "mist";
    case Defense::kMistMixup:
      return "mist+mixup";
    case Defense::kMixup:
      return "mixup";
  }
  return "none";
}

Defense ParseDefense(std::string_view name) {
  for (Defense d : {Defense::kNone, Defense::kMist, Defense::kMistMixup, Defense::kMixup}) {
    if (ToString(d) == name) return d;
  }
  throw ConfigError("defense: unknown value '" + std::string(name) +
                    "' (expected none, mist, mist+mixup or mixup)");
}

std::string_view ToString(AttackKind kind) {
  switch (kind) {
    case AttackKind::kLoss:
      return "loss";
    case AttackKind::kMentr:
      return "mentr";
    case AttackKind::kClassNn:
      return "classnn";
    case AttackKind::kPerturb:
      return "perturb";
    case AttackKind::kLira:
      return "lira";
    case AttackKind::kCanary:
      return "canary";
  }
  return "loss";
}

AttackKind ParseAttackKind(std::string_view name) {
  for (AttackKind a : {AttackKind::kLoss, AttackKind::kMentr, AttackKind::kClassNn,
                       AttackKind::kPerturb, AttackKind::kLira, AttackKind::kCanary}) {
    if (ToString(a) == name) return a;
  }
  throw ConfigError("attacks: unknown attack '" + std::string(name) +
                    "' (expected loss, mentr, classnn, perturb, lira or canary)");
}

bool NeedsShadows(AttackKind kind) {
  return kind == AttackKind::kClassNn || kind == AttackKind::kLira ||
         kind == AttackKind::kCanary;
}

MistConfig ExperimentConfig::RecipeFor(Defense d) const {
  MistConfig cfg = recipe;
  cfg.seed = seed;
  cfg.threads = threads;
  if (d == Defense::kNone || d == Defense::kMixup) {
    cfg.submodels = 1;
    cfg.lambda = 0.0;
  }
  if (d == Defense::kMixup || d == Defense::kMistMixup) {
    cfg.mixup_alpha = mixup_alpha;
  } else {
    cfg.mixup_alpha.reset();
  }
  return cfg;
}

MistConfig ExperimentConfig::TargetRecipe() const { return RecipeFor(defense); }

void ExperimentConfig::Validate() const {
  if (dataset.source == DatasetConfig::Source::kCsv) {
    if (dataset.path.empty()) throw ConfigError("dataset.path is required for csv data");
    if (!std::filesystem::exists(dataset.path)) {
      throw ConfigError("dataset.path: file not found: " + dataset.path.string());
    }
  } else {
    const SyntheticSpec& s = dataset.synthetic;
    if (s.classes < 2) throw ConfigError("dataset.classes must be >= 2");
    if (s.dim < 1) throw ConfigError("dataset.dim must be >= 1");
    if (s.per_class < 1) throw ConfigError("dataset.per_class must be >= 1");
    if (!(s.cluster_spread >= 0.0)) throw ConfigError("dataset.cluster_spread must be >= 0");
    if (!(s.center_scale >= 0.0)) throw ConfigError("dataset.center_scale must be >= 0");
  }
  if (!(mixup_alpha > 0.0)) throw ConfigError("mixup.alpha must be > 0");
  if (defense == Defense::kMist || defense == Defense::kMistMixup) {
    if (recipe.submodels < 2) throw ConfigError("mist.C must be >= 2 for a mist defense");
  }
  TargetRecipe().Validate();
  if (shadows < 4) throw ConfigError("shadow.count must be >= 4");
  if (attacks.empty()) throw ConfigError("attacks: at least one attack is required");
  if (fpr_targets.empty()) throw ConfigError("fpr_targets: at least one target is required");
  for (double f : fpr_targets) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("fpr_targets: entries must lie in (0, 1)");
  }
  if (!(perturb_sigma_scale > 0.0)) throw ConfigError("perturb.sigma_scale must be > 0");
  if (perturb_samples < 1) throw ConfigError("perturb.samples must be >= 1");
  if (canary_count < 1) throw ConfigError("canary.count must be >= 1");
  if (canary_steps < 0) throw ConfigError("canary.steps must be >= 0");
  if (!(canary_step_scale >= 0.0)) throw ConfigError("canary.step_scale must be >= 0");
  if (!(canary_noise_scale >= 0.0)) throw ConfigError("canary.noise_scale must be >= 0");
  if (classnn.epochs < 0) throw ConfigError("classnn.epochs must be >= 0");
  if (!(classnn.lr > 0.0)) throw ConfigError("classnn.lr must be > 0");
  if (classnn.batch_size < 1) throw ConfigError("classnn.batch_size must be >= 1");
  for (int h : classnn.hidden) {
    if (h < 1) throw ConfigError("classnn.hidden entries must be positive");
  }
  if (lambda_grid.empty()) throw ConfigError("tune.lambda_grid must not be empty");
  for (double l : lambda_grid) {
    if (l < 0.0) throw ConfigError("tune.lambda_grid entries must be >= 0");
  }
  if (!(max_accuracy_drop >= 0.0)) throw ConfigError("tune.max_accuracy_drop must be >= 0");
  if (ablate_variants.empty()) throw ConfigError("ablate.variants must not be empty");
  if (oracle_removals < 1) throw ConfigError("oracle.removals must be >= 1");
  if (oracle_lambdas.empty()) throw ConfigError("oracle.lambdas must not be empty");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::string ExperimentConfig::ToText() const {
  const auto real = [](double v) { return FormatReal(v); };
  const auto integer = [](int v) { return std::to_string(v); };
  std::ostringstream out;
  out << "experiment = " << experiment << '\n'
      << "seed = " << seed << '\n'
      << "threads = " << threads << '\n'
      << "output_dir = " << output_dir.string() << '\n';
  if (dataset.source == DatasetConfig::Source::kCsv) {
    out << "dataset.source = csv\n"
        << "dataset.path = " << dataset.path.string() << '\n'
        << "dataset.label_column = " << dataset.label_column << '\n';
    if (dataset.classes) out << "dataset.classes = " << *dataset.classes << '\n';
  } else {
    const SyntheticSpec& s = dataset.synthetic;
    out << "dataset.source = synthetic\n"
        << "dataset.classes = " << s.classes << '\n'
        << "dataset.dim = " << s.dim << '\n'
        << "dataset.per_class = " << s.per_class << '\n'
        << "dataset.cluster_spread = " << real(s.cluster_spread) << '\n'
        << "dataset.center_scale = " << real(s.center_scale) << '\n'
        << "dataset.seed = " << s.seed << '\n';
  }
  out << "dataset.integer_features = " << (dataset.strict_integer_features ? "strict" : "off")
      << '\n'
      << "split.members = " << split.members << '\n'
      << "split.nonmembers = " << split.nonmembers << '\n'
      << "split.validation = " << split.validation << '\n'
      << "split.test = " << split.test << '\n'
      << "defense = " << ToString(defense) << '\n'
      << "model.hidden = " << JoinList(recipe.hidden, integer) << '\n'
      << "train.epochs = " << recipe.epochs << '\n'
      << "train.batch_size = " << recipe.batch_size << '\n'
      << "train.lr = " << real(recipe.lr) << '\n'
      << "train.lr_decay = " << real(recipe.lr_decay) << '\n'
      << "train.lr_decay_every = " << recipe.lr_decay_every << '\n'
      << "mist.C = " << recipe.submodels << '\n'
      << "mist.lambda = " << real(recipe.lambda) << '\n'
      << "mist.variant = " << ToString(recipe.variant) << '\n';
  if (recipe.t1) out << "mist.t1 = " << *recipe.t1 << '\n';
  if (recipe.t2) out << "mist.t2 = " << *recipe.t2 << '\n';
  if (recipe.phase2_lr) out << "mist.phase2_lr = " << real(*recipe.phase2_lr) << '\n';
  out << "mist.phase2_include_ce = " << (recipe.phase2_include_ce ? "true" : "false") << '\n'
      << "mixup.alpha = " << real(mixup_alpha) << '\n'
      << "shadow.count = " << shadows << '\n'
      << "shadow.split = "
      << (shadow_split == ShadowSplitMode::kBalanced ? "balanced" : "independent") << '\n'
      << "shadow.score = " << ToString(score_kind) << '\n'
      << "attacks = "
      << JoinList(attacks, [](AttackKind a) { return std::string(ToString(a)); }) << '\n'
      << "fpr_targets = " << JoinList(fpr_targets, real) << '\n'
      << "perturb.sigma_scale = " << real(perturb_sigma_scale) << '\n'
      << "perturb.samples = " << perturb_samples << '\n'
      << "canary.count = " << canary_count << '\n'
      << "canary.steps = " << canary_steps << '\n'
      << "canary.step_scale = " << real(canary_step_scale) << '\n'
      << "canary.noise_scale = " << real(canary_noise_scale) << '\n'
      << "canary.eval_limit = " << canary_eval_limit << '\n'
      << "classnn.hidden = " << JoinList(classnn.hidden, integer) << '\n'
      << "classnn.epochs = " << classnn.epochs << '\n'
      << "classnn.lr = " << real(classnn.lr) << '\n'
      << "classnn.batch_size = " << classnn.batch_size << '\n'
      << "classnn.min_rows = " << classnn.min_rows << '\n'
      << "tune.lambda_grid = " << JoinList(lambda_grid, real) << '\n'
      << "tune.max_accuracy_drop = " << real(max_accuracy_drop) << '\n'
      << "ablate.variants = "
      << JoinList(ablate_variants,
                  [](XdiffVariant v) { return std::string(ToString(v)); })
      << '\n'
      << "oracle.removals = " << oracle_removals << '\n'
      << "oracle.lambdas = " << JoinList(oracle_lambdas, real) << '\n';
  return out.str();
}

ExperimentConfig ParseConfig(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = Trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = Trim(std::string_view(body).substr(0, eq));
    const std::string value = Trim(std::string_view(body).substr(eq + 1));
    const auto& setters = Setters();
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": key '" + key +
                        "' set twice");
    }
    WithContext(source, line_no, [&] { it->second(cfg, key, value); });
  }
  return cfg;
}

ExperimentConfig LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  ExperimentConfig cfg = ParseConfig(in, path.string());
  // Data paths are relative to the config file.
  if (!cfg.dataset.path.empty() && cfg.dataset.path.is_relative()) {
    cfg.dataset.path = path.parent_path() / cfg.dataset.path;
  }
  return cfg;
}

}  // namespace mistlab
