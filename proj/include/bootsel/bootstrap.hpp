// bootsel/bootstrap.hpp

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

// Bootstrapping selection of synthesized (translated) training data.
//
// M_0 is trained on the target data alone. In round i the current model M_i
// scores every synthesized sample and a criterion keeps those that look like
// target-domain data:
//
//   chi1: argmax M_i(x) equals the hard label.
//   chi2: argmax M_i(x) equals argmax of the soft label, and
//         KL(M_i(x) || soft label) is strictly below the median KL taken
//         over the whole synthesized set.
//
// M_{i+1} is then trained from scratch on target data plus the kept samples.
// Every round rescans the full synthesized set.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bootsel/common.hpp"
#include "bootsel/dataset.hpp"
#include "bootsel/emotion.hpp"
#include "bootsel/eval.hpp"
#include "bootsel/net.hpp"
#include "bootsel/parallel.hpp"

namespace bootsel {

enum class Criterion { kChi1, kChi2 };

inline std::string_view criterion_name(Criterion c) { return c == Criterion::kChi1 ? "chi1" : "chi2"; }

inline std::optional<Criterion> parse_criterion(std::string_view s) {
  if (s == "chi1") return Criterion::kChi1;
  if (s == "chi2") return Criterion::kChi2;
  return std::nullopt;
}

/// KL(p || q) = sum_c p_c ln(p_c / q_c). Both inputs are clamped to
/// [1e-12, 1] and renormalized first, so zero entries are harmless.
inline double kl_divergence(const ClassProbs& p, const ClassProbs& q) {
  auto prep = [](const ClassProbs& in) {
    ClassProbs out{};
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (!std::isfinite(in[c])) throw DomainError("kl_divergence: non-finite input");
      out[c] = std::clamp(in[c], kProbFloor, 1.0);
      sum += out[c];
    }
    for (double& v : out) v /= sum;
    return out;
  };
  const ClassProbs pp = prep(p), qq = prep(q);
  double kl = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) kl += pp[c] * std::log(pp[c] / qq[c]);
  return kl;
}

/// Middle value; mean of the two middle values for an even count.
inline double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median: empty input");
  const std::size_t n = values.size(), mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return (lo + hi) / 2.0;
}

inline bool chi1(const ClassProbs& pred, Emotion hard_label) { return argmax_label(pred) == hard_label; }

inline bool chi2(const ClassProbs& pred, const SoftLabel& soft, double med_threshold) {
  return argmax_label(pred) == soft.argmax() && kl_divergence(pred, soft.probs()) < med_threshold;
}

inline constexpr std::size_t kKlHistogramBins = 20;
inline constexpr double kKlHistogramMax = 5.0;

struct SelectionRound {
  std::size_t iteration = 0;
  Criterion criterion = Criterion::kChi2;
  std::vector<std::string> selected_ids;  // in D_syn order
  std::vector<double> kl_values;          // one per D_syn sample; chi2 only
  std::optional<double> median_kl;        // chi2 only
  std::size_t kept = 0;
  std::size_t total = 0;

  /// 20 equal bins over [0, 5]; values at or above 5 land in the last bin.
  std::array<std::size_t, kKlHistogramBins> kl_histogram() const {
    std::array<std::size_t, kKlHistogramBins> h{};
    for (double v : kl_values) {
      auto b = static_cast<std::size_t>(std::max(0.0, v) / (kKlHistogramMax / kKlHistogramBins));
      ++h[std::min(b, kKlHistogramBins - 1)];
    }
    return h;
  }
};

/// Scores all of `d_syn` with `model` and applies `criterion`.
inline SelectionRound select_round(const Model& model, const Dataset& d_syn, Criterion criterion,
                                   std::size_t iteration = 0) {
  if (criterion == Criterion::kChi2) {
    for (const auto& s : d_syn)
      if (!s.soft_label)
        throw DomainError("chi2 selection needs a soft label on every synthesized sample; sample " + s.id +
                          " has none (use criterion chi1 or add soft labels to the manifest)");
  }
  SelectionRound round;
  round.iteration = iteration;
  round.criterion = criterion;
  round.total = d_syn.size();
  if (d_syn.empty()) return round;

  const auto preds = predict(model, d_syn);
  if (criterion == Criterion::kChi1) {
    for (std::size_t i = 0; i < d_syn.size(); ++i)
      if (chi1(preds[i].probs, d_syn[i].hard_label)) round.selected_ids.push_back(d_syn[i].id);
  } else {
    round.kl_values.reserve(d_syn.size());
    for (std::size_t i = 0; i < d_syn.size(); ++i)
      round.kl_values.push_back(kl_divergence(preds[i].probs, d_syn[i].soft_label->probs()));
    const double med = median(round.kl_values);
    round.median_kl = med;
    for (std::size_t i = 0; i < d_syn.size(); ++i) {
      const auto& soft = *d_syn[i].soft_label;
      if (argmax_label(preds[i].probs) == soft.argmax() && round.kl_values[i] < med)
        round.selected_ids.push_back(d_syn[i].id);
    }
  }
  round.kept = round.selected_ids.size();
  return round;
}

struct PipelineResult {
  std::vector<Model> models;          // M_0 .. M_I
  std::vector<SelectionRound> rounds;  // rounds[i] produced D_syn^(i+1) from M_i
  std::vector<Metrics> metrics;       // per model on the evaluation split, if given
  std::vector<std::string> warnings;

  const Model& final_model() const { return models.back(); }
};

/// Samples of `d_syn` whose ids appear in `ids` (which is in D_syn order).
inline Dataset take_selected(const Dataset& d_syn, const std::vector<std::string>& ids) {
  std::vector<std::size_t> idx;
  idx.reserve(ids.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < d_syn.size() && j < ids.size(); ++i)
    if (d_syn[i].id == ids[j]) {
      idx.push_back(i);
      ++j;
    }
  if (j != ids.size()) throw DomainError("take_selected: ids not in dataset order");
  return d_syn.subset(idx, d_syn.name() + "/selected");
}

/// Trains M_0 on `d_tgt`, then runs `iterations` select/retrain rounds.
/// Every model is trained from a fresh initialization with cfg.seed. When
/// `eval_split` is given, each M_i is scored on it.
inline PipelineResult run_pipeline(const Dataset& d_tgt, const Dataset& d_syn, std::size_t iterations,
                                   Criterion criterion, const TrainConfig& cfg,
                                   const Dataset* eval_split = nullptr) {
  if (d_tgt.empty()) throw DomainError("run_pipeline: empty target set");
  if (criterion == Criterion::kChi2)
    for (const auto& s : d_syn)
      if (!s.soft_label)
        throw DomainError("chi2 selection needs a soft label on every synthesized sample; sample " + s.id +
                          " has none (use criterion chi1 or add soft labels to the manifest)");

  PipelineResult res;
  auto add_model = [&](Model m) {
    if (eval_split) res.metrics.push_back(evaluate_model(m, *eval_split));
    res.models.push_back(std::move(m));
  };
  add_model(train(d_tgt, cfg));
  for (std::size_t i = 0; i < iterations; ++i) {
    SelectionRound round = select_round(res.models.back(), d_syn, criterion, i);
    if (round.kept == 0) {
      res.warnings.push_back("round " + std::to_string(i) + " selected no synthesized samples; retraining on target only");
      add_model(train(d_tgt, cfg));
    } else {
      add_model(train(concat(d_tgt, take_selected(d_syn, round.selected_ids), d_tgt.name() + "+syn"), cfg));
    }
    res.rounds.push_back(std::move(round));
  }
  return res;
}

/// Result of running the pipeline on every (fold, seed) cell.
struct BootstrapRun {
  RunSpec spec;
  std::vector<Metrics> metrics;  // per iteration 0..I on the test fold
  std::vector<SelectionRound> rounds;
  std::vector<std::string> warnings;
};

struct BootstrapReport {
  std::vector<BootstrapRun> runs;
  std::vector<MetricsReport> per_iteration;  // aggregate over runs, per iteration
  MetricsReport oracle;                      // per-run best iteration, per metric

  const MetricsReport& final_report() const { return per_iteration.back(); }
};

/// Per-run best value over iterations, taken independently for each metric.
inline Metrics best_over_iterations(const std::vector<Metrics>& per_iter) {
  Metrics best = per_iter.front();
  for (const auto& m : per_iter) {
    best.ua = std::max(best.ua, m.ua);
    best.wa = std::max(best.wa, m.wa);
    best.f1 = std::max(best.f1, m.f1);
  }
  best.confusion = {};
  return best;
}

/// Speaker-aware cross-validation of the whole pipeline: the target set is
/// split into folds and the full `d_syn` is available to every fold.
inline BootstrapReport cross_validate_bootstrap(const Dataset& d_tgt, const Dataset& d_syn, const TrainConfig& cfg,
                                                std::size_t k, const std::vector<std::uint64_t>& seeds,
                                                std::size_t iterations, Criterion criterion, std::size_t jobs = 1) {
  if (seeds.empty()) throw DomainError("cross_validate_bootstrap: no seeds");
  cfg.check();
  FoldPlan plan = partition_speakers(d_tgt, k);
  auto specs = make_runs(k, seeds, cfg.seed);
  BootstrapReport rep;
  rep.runs = parallel_map(specs.size(), jobs, [&](std::size_t r) {
    const RunSpec& spec = specs[r];
    return annotate_run(spec, [&] {
      Dataset train_split = d_tgt.subset(plan.train_indices(spec.fold), d_tgt.name() + "/train");
      Dataset test_split = d_tgt.subset(plan.test_indices[spec.fold], d_tgt.name() + "/test");
      TrainConfig run_cfg = cfg;
      run_cfg.seed = spec.train_seed;
      PipelineResult pr = run_pipeline(train_split, d_syn, iterations, criterion, run_cfg, &test_split);
      return BootstrapRun{spec, std::move(pr.metrics), std::move(pr.rounds), std::move(pr.warnings)};
    });
  });
  for (std::size_t i = 0; i <= iterations; ++i) {
    std::vector<RunMetrics> at_i;
    for (const auto& run : rep.runs) at_i.push_back({run.spec.fold, run.spec.seed, run.metrics[i]});
    rep.per_iteration.push_back(summarize(std::move(at_i)));
  }
  std::vector<RunMetrics> best;
  for (const auto& run : rep.runs) best.push_back({run.spec.fold, run.spec.seed, best_over_iterations(run.metrics)});
  rep.oracle = summarize(std::move(best));
  return rep;
}

}  // namespace bootsel
