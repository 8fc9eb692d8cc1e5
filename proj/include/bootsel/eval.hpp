// bootsel/eval.hpp

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

// Speaker-aware k-fold cross-validation repeated over several seeds.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bootsel/common.hpp"
#include "bootsel/dataset.hpp"
#include "bootsel/metrics.hpp"
#include "bootsel/net.hpp"
#include "bootsel/parallel.hpp"

namespace bootsel {

struct FoldPlan {
  std::vector<std::vector<std::string>> speakers;    // per fold, sorted
  std::vector<std::vector<std::size_t>> test_indices;  // per fold, ascending

  std::size_t num_folds() const { return speakers.size(); }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < num_folds(); ++f)
      if (f != fold) out.insert(out.end(), test_indices[f].begin(), test_indices[f].end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Greedy balanced split: speakers ordered by utterance count (descending,
/// ties by id) are each given to the fold with the fewest utterances so far
/// (ties by fold index).
inline FoldPlan partition_speakers(const Dataset& ds, std::size_t k) {
  if (k == 0) throw DomainError("partition_speakers: k must be positive");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : ds) ++counts[s.speaker];
  if (counts.size() < k)
    throw DomainError("partition_speakers: " + std::to_string(counts.size()) + " speakers cannot fill " +
                      std::to_string(k) + " folds");

  std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  FoldPlan plan;
  plan.speakers.resize(k);
  plan.test_indices.resize(k);
  std::vector<std::size_t> load(k, 0);
  std::unordered_map<std::string, std::size_t> fold_of;
  for (const auto& [spk, n] : order) {
    std::size_t f = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    load[f] += n;
    plan.speakers[f].push_back(spk);
    fold_of[spk] = f;
  }
  for (auto& v : plan.speakers) std::sort(v.begin(), v.end());
  for (std::size_t i = 0; i < ds.size(); ++i) plan.test_indices[fold_of[ds[i].speaker]].push_back(i);
  return plan;
}

struct RunMetrics {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  Metrics metrics;

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct MetricSummary {
  double ua = 0.0, wa = 0.0, f1 = 0.0;
  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct MetricsReport {
  std::vector<RunMetrics> runs;  // seed-major, then fold
  MetricSummary mean;
  MetricSummary stddev;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Means are taken over folds within each seed, then over seeds. The
/// standard deviation is the population deviation over all runs.
inline MetricsReport summarize(std::vector<RunMetrics> runs) {
  MetricsReport r;
  r.runs = std::move(runs);
  if (r.runs.empty()) return r;
  std::map<std::uint64_t, std::pair<MetricSummary, std::size_t>> per_seed;
  for (const auto& run : r.runs) {
    auto& [acc, n] = per_seed[run.seed];
    acc.ua += run.metrics.ua;
    acc.wa += run.metrics.wa;
    acc.f1 += run.metrics.f1;
    ++n;
  }
  // Preserve first-appearance order of seeds for the reduction.
  std::vector<std::uint64_t> seed_order;
  for (const auto& run : r.runs)
    if (std::find(seed_order.begin(), seed_order.end(), run.seed) == seed_order.end()) seed_order.push_back(run.seed);
  for (std::uint64_t s : seed_order) {
    const auto& [acc, n] = per_seed[s];
    r.mean.ua += acc.ua / n;
    r.mean.wa += acc.wa / n;
    r.mean.f1 += acc.f1 / n;
  }
  const double ns = static_cast<double>(seed_order.size());
  r.mean.ua /= ns;
  r.mean.wa /= ns;
  r.mean.f1 /= ns;

  double mu_ua = 0, mu_wa = 0, mu_f1 = 0;
  for (const auto& run : r.runs) {
    mu_ua += run.metrics.ua;
    mu_wa += run.metrics.wa;
    mu_f1 += run.metrics.f1;
  }
  const double n = static_cast<double>(r.runs.size());
  mu_ua /= n;
  mu_wa /= n;
  mu_f1 /= n;
  for (const auto& run : r.runs) {
    r.stddev.ua += (run.metrics.ua - mu_ua) * (run.metrics.ua - mu_ua);
    r.stddev.wa += (run.metrics.wa - mu_wa) * (run.metrics.wa - mu_wa);
    r.stddev.f1 += (run.metrics.f1 - mu_f1) * (run.metrics.f1 - mu_f1);
  }
  r.stddev.ua = std::sqrt(r.stddev.ua / n);
  r.stddev.wa = std::sqrt(r.stddev.wa / n);
  r.stddev.f1 = std::sqrt(r.stddev.f1 / n);
  return r;
}

inline Metrics evaluate_model(const Model& model, const Dataset& test) {
  std::vector<Emotion> labels, preds;
  labels.reserve(test.size());
  preds.reserve(test.size());
  for (const auto& p : predict(model, test)) preds.push_back(p.label);
  for (const auto& s : test) labels.push_back(s.hard_label);
  return compute_metrics(labels, preds);
}

/// One (fold, seed) cell of a cross-validation grid.
struct RunSpec {
  std::size_t fold = 0;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  std::uint64_t train_seed = 0;  // derived per-run RNG seed
};

/// Seed-major enumeration. The training seed of each run is
/// derive_seed(base_seed, fold, seed).
inline std::vector<RunSpec> make_runs(std::size_t k, const std::vector<std::uint64_t>& seeds,
                                      std::uint64_t base_seed) {
  std::vector<RunSpec> runs;
  for (std::size_t si = 0; si < seeds.size(); ++si)
    for (std::size_t f = 0; f < k; ++f) runs.push_back({f, si, seeds[si], derive_seed(base_seed, f, seeds[si])});
  return runs;
}

/// Re-throws a failure with its grid position attached.
template <typename Fn>
auto annotate_run(const RunSpec& run, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw DomainError("fold " + std::to_string(run.fold) + ", seed " + std::to_string(run.seed) + ": " + e.what());
  }
}

struct CvOptions {
  std::size_t jobs = 1;
  /// Appended to every training split (e.g. all of D_syn for naive training).
  const Dataset* extra_train = nullptr;
  /// Applied to each training split before training; gets the run seed.
  std::function<Dataset(const Dataset&, std::uint64_t)> augment;
};

inline MetricsReport cross_validate(const Dataset& ds, const TrainConfig& cfg, std::size_t k,
                                    const std::vector<std::uint64_t>& seeds, const CvOptions& opts = {}) {
  if (seeds.empty()) throw DomainError("cross_validate: no seeds");
  cfg.check();
  FoldPlan plan = partition_speakers(ds, k);
  auto runs = make_runs(k, seeds, cfg.seed);
  auto results = parallel_map(runs.size(), opts.jobs, [&](std::size_t r) {
    const RunSpec& run = runs[r];
    return annotate_run(run, [&] {
      Dataset train_split = ds.subset(plan.train_indices(run.fold), ds.name() + "/train");
      Dataset test_split = ds.subset(plan.test_indices[run.fold], ds.name() + "/test");
      if (opts.augment) train_split = opts.augment(train_split, run.train_seed);
      if (opts.extra_train) train_split = concat(train_split, *opts.extra_train, train_split.name());
      TrainConfig run_cfg = cfg;
      run_cfg.seed = run.train_seed;
      return RunMetrics{run.fold, run.seed, evaluate_model(train(train_split, run_cfg), test_split)};
    });
  });
  return summarize(std::move(results));
}

}  // namespace bootsel
