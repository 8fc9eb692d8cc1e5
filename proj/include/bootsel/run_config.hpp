// bootsel/run_config.hpp

// Copyright 2026 The bootsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration files.
//
// A run config is one JSON object:
//
//   {
//     "target_manifest": "data/target.jsonl",
//     "synthetic_manifest": "data/synthetic.jsonl",   // bootstrap, sweep
//     "language": "de",                               // optional filter on D_syn
//     "criterion": "chi2",
//     "iterations": 2,
//     "folds": 5,
//     "seeds": [0, 1, 2],
//     "augment": {"kind": "none"},                    // baseline only
//     "train": { ...TrainConfig fields... },
//     "out": "runs/demo"
//   }
//
// Relative paths are resolved against the directory holding the config.
// Unknown keys anywhere are an error. Bench configs for synthgen follow the
// same rules with BenchConfig field names.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bootsel/bootstrap.hpp"
#include "bootsel/common.hpp"
#include "bootsel/feature_io.hpp"
#include "bootsel/net.hpp"
#include "bootsel/synthbench.hpp"
#include "json.hpp"

namespace bootsel {

enum class AugmentKind { kNone, kNoise, kCopyPaste, kSynthetic };

inline std::string_view augment_name(AugmentKind k) {
  switch (k) {
    case AugmentKind::kNone: return "none";
    case AugmentKind::kNoise: return "noise";
    case AugmentKind::kCopyPaste: return "copypaste";
    case AugmentKind::kSynthetic: return "synthetic";
  }
  return "none";
}

/// Comparison baselines: jittered copies, frame concatenation with neutral
/// samples, or all of D_syn appended without selection.
struct AugmentConfig {
  AugmentKind kind = AugmentKind::kNone;
  double sigma = 0.1;
  std::size_t copies = 1;
};

struct RunConfig {
  fs::path target_manifest;
  std::optional<fs::path> synthetic_manifest;
  std::optional<std::string> language;
  Criterion criterion = Criterion::kChi2;
  std::size_t iterations = 2;
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t jobs = 1;
  AugmentConfig augment;
  TrainConfig train;
  fs::path out = "out";

  void check() const {
    if (target_manifest.empty()) throw DomainError("config: target_manifest is required");
    if (folds < 2) throw DomainError("config: folds must be >= 2");
    if (seeds.empty()) throw DomainError("config: seeds must not be empty");
    if (jobs == 0) throw DomainError("config: jobs must be >= 1");
    if (!(augment.sigma >= 0.0)) throw DomainError("config: augment.sigma must be >= 0");
    train.check();
  }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw DomainError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw DomainError(where + ": unknown key \"" + key + "\"");
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw DomainError(where + ": \"" + key + "\" must be a string");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw DomainError(where + ": \"" + key + "\" must be a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_unsigned()) throw DomainError(where + ": \"" + key + "\" must be a non-negative integer");
  } else {
    if (!v.is_number()) throw DomainError(where + ": \"" + key + "\" must be a number");
  }
  return v.get<T>();
}

template <typename T>
void read_opt(const json& obj, const char* key, T& dst, const std::string& where) {
  if (obj.contains(key)) dst = get_field<T>(obj, key, where);
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline json parse_json_file(const fs::path& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

}  // namespace detail

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  const std::string where = "config.train";
  detail::reject_unknown(j, {"hidden_dim", "learning_rate", "epochs", "batch_size", "beta1", "beta2", "epsilon",
                             "weight_decay", "seed", "label_mode", "pooling"},
                         where);
  TrainConfig c;
  detail::read_opt(j, "hidden_dim", c.hidden_dim, where);
  detail::read_opt(j, "learning_rate", c.learning_rate, where);
  detail::read_opt(j, "epochs", c.epochs, where);
  detail::read_opt(j, "batch_size", c.batch_size, where);
  detail::read_opt(j, "beta1", c.beta1, where);
  detail::read_opt(j, "beta2", c.beta2, where);
  detail::read_opt(j, "epsilon", c.epsilon, where);
  detail::read_opt(j, "weight_decay", c.weight_decay, where);
  detail::read_opt(j, "seed", c.seed, where);
  if (j.contains("label_mode")) {
    auto s = detail::get_field<std::string>(j, "label_mode", where);
    if (s == "hard") c.label_mode = LabelMode::kHard;
    else if (s == "soft") c.label_mode = LabelMode::kSoft;
    else throw DomainError(where + ": label_mode must be \"hard\" or \"soft\"");
  }
  if (j.contains("pooling")) {
    auto s = detail::get_field<std::string>(j, "pooling", where);
    if (s == "mean") c.pooling = Pooling::kMean;
    else if (s == "max") c.pooling = Pooling::kMax;
    else throw DomainError(where + ": pooling must be \"mean\" or \"max\"");
  }
  c.check();
  return c;
}

/// Parses and validates a run config. `base_dir` anchors relative paths.
inline RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  const std::string where = "config";
  detail::reject_unknown(j, {"target_manifest", "synthetic_manifest", "language", "criterion", "iterations", "folds",
                             "seeds", "jobs", "augment", "train", "out"},
                         where);
  RunConfig c;
  if (!j.contains("target_manifest")) throw DomainError("config: missing \"target_manifest\"");
  c.target_manifest = detail::resolve(base_dir, detail::get_field<std::string>(j, "target_manifest", where));
  if (j.contains("synthetic_manifest"))
    c.synthetic_manifest = detail::resolve(base_dir, detail::get_field<std::string>(j, "synthetic_manifest", where));
  if (j.contains("language")) c.language = detail::get_field<std::string>(j, "language", where);
  if (j.contains("criterion")) {
    auto s = detail::get_field<std::string>(j, "criterion", where);
    auto crit = parse_criterion(s);
    if (!crit) throw DomainError("config: criterion must be \"chi1\" or \"chi2\"");
    c.criterion = *crit;
  }
  detail::read_opt(j, "iterations", c.iterations, where);
  detail::read_opt(j, "folds", c.folds, where);
  detail::read_opt(j, "jobs", c.jobs, where);
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_array()) throw DomainError("config: \"seeds\" must be an array of non-negative integers");
    c.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) throw DomainError("config: \"seeds\" must be an array of non-negative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    detail::reject_unknown(a, {"kind", "sigma", "copies"}, "config.augment");
    if (a.contains("kind")) {
      auto s = detail::get_field<std::string>(a, "kind", "config.augment");
      if (s == "none") c.augment.kind = AugmentKind::kNone;
      else if (s == "noise") c.augment.kind = AugmentKind::kNoise;
      else if (s == "copypaste") c.augment.kind = AugmentKind::kCopyPaste;
      else if (s == "synthetic") c.augment.kind = AugmentKind::kSynthetic;
      else throw DomainError("config.augment: kind must be none, noise, copypaste or synthetic");
    }
    detail::read_opt(a, "sigma", c.augment.sigma, "config.augment");
    detail::read_opt(a, "copies", c.augment.copies, "config.augment");
  }
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("out")) c.out = detail::resolve(base_dir, detail::get_field<std::string>(j, "out", where));
  c.check();
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(detail::parse_json_file(path), path.parent_path());
}

/// Canonical form; paths as given after resolution. `jobs` and `out` are
/// left out so the hash only covers what affects results.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["target_manifest"] = c.target_manifest.generic_string();
  if (c.synthetic_manifest) j["synthetic_manifest"] = c.synthetic_manifest->generic_string();
  if (c.language) j["language"] = *c.language;
  j["criterion"] = std::string(criterion_name(c.criterion));
  j["iterations"] = c.iterations;
  j["folds"] = c.folds;
  j["seeds"] = c.seeds;
  nlohmann::ordered_json a;
  a["kind"] = std::string(augment_name(c.augment.kind));
  a["sigma"] = c.augment.sigma;
  a["copies"] = c.augment.copies;
  j["augment"] = a;
  j["train"] = to_json(c.train);
  return j;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

/// Command-line values; each one present replaces the config value.
struct Overrides {
  std::optional<Criterion> criterion;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> folds;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::size_t> jobs;
  std::optional<fs::path> out;
};

inline RunConfig apply_overrides(RunConfig c, const Overrides& o) {
  if (o.criterion) c.criterion = *o.criterion;
  if (o.iterations) c.iterations = *o.iterations;
  if (o.folds) c.folds = *o.folds;
  if (o.seeds) c.seeds = *o.seeds;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.out) c.out = *o.out;
  c.check();
  return c;
}

inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
  const std::string where = "bench config";
  detail::reject_unknown(j, {"feature_dim", "frames", "separation", "sigma", "speaker_sigma", "n_target",
                             "n_synthetic", "clean_fraction", "shift", "shift_alignment", "label_corruption",
                             "annotators", "dissent", "smoothing_alpha", "target_speakers", "synthetic_speakers",
                             "target_language", "source_language", "off_language_fraction", "seed"},
                         where);
  BenchConfig c;
  detail::read_opt(j, "feature_dim", c.feature_dim, where);
  detail::read_opt(j, "frames", c.frames, where);
  detail::read_opt(j, "separation", c.separation, where);
  detail::read_opt(j, "sigma", c.sigma, where);
  detail::read_opt(j, "speaker_sigma", c.speaker_sigma, where);
  detail::read_opt(j, "n_target", c.n_target, where);
  detail::read_opt(j, "n_synthetic", c.n_synthetic, where);
  detail::read_opt(j, "clean_fraction", c.clean_fraction, where);
  detail::read_opt(j, "shift", c.shift, where);
  detail::read_opt(j, "shift_alignment", c.shift_alignment, where);
  detail::read_opt(j, "label_corruption", c.label_corruption, where);
  detail::read_opt(j, "annotators", c.annotators, where);
  detail::read_opt(j, "dissent", c.dissent, where);
  detail::read_opt(j, "smoothing_alpha", c.smoothing_alpha, where);
  detail::read_opt(j, "target_speakers", c.target_speakers, where);
  detail::read_opt(j, "synthetic_speakers", c.synthetic_speakers, where);
  detail::read_opt(j, "target_language", c.target_language, where);
  detail::read_opt(j, "source_language", c.source_language, where);
  detail::read_opt(j, "off_language_fraction", c.off_language_fraction, where);
  detail::read_opt(j, "seed", c.seed, where);
  c.check();
  return c;
}

inline BenchConfig load_bench_config(const fs::path& path) {
  return bench_config_from_json(detail::parse_json_file(path));
}

}  // namespace bootsel
