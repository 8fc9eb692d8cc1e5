// bootsel/synthbench.hpp

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

// Synthetic target/synthesized benchmark with a controlled domain gap.
//
// Target features are Gaussian around four unit-norm class means. Of the
// synthesized set, a fraction `clean_fraction` follows the target law
// exactly; the rest is shifted by `shift` along one random direction, and a
// fraction `label_corruption` of the shifted samples carries a wrong label
// (a fixed derangement of the classes, with annotator votes that agree with
// the wrong label). Provenance is returned separately for scoring.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bootsel/bootstrap.hpp"
#include "bootsel/common.hpp"
#include "bootsel/dataset.hpp"
#include "bootsel/emotion.hpp"
#include "json.hpp"

namespace bootsel {

struct BenchConfig {
  std::size_t feature_dim = 16;
  std::size_t frames = 1;
  /// Pairwise cosine between class means is 1 - 4s/3: s = 1 gives a regular
  /// simplex, s = 0.75 orthogonal means, s -> 0 coincident means.
  double separation = 1.0;
  double sigma = 0.5;
  /// Standard deviation of the per-speaker offset added to every frame.
  double speaker_sigma = 0.05;
  std::size_t n_target = 160;
  std::size_t n_synthetic = 800;
  double clean_fraction = 0.5;
  double shift = 2.0;  // 4 sigma
  /// Share of the shift direction's energy inside the subspace spanned by the
  /// class-mean differences; 0 draws it from the complement.
  double shift_alignment = 1.0;
  double label_corruption = 0.5;
  std::size_t annotators = 100;
  double dissent = 0.2;
  double smoothing_alpha = 0.05;
  std::size_t target_speakers = 8;
  std::size_t synthetic_speakers = 40;
  std::string target_language = "de";
  std::string source_language = "en";
  /// Synthesized samples tagged with source_language (failed translations).
  double off_language_fraction = 0.0;
  std::uint64_t seed = 0;

  void check() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (feature_dim < kNumClasses + 1) throw DomainError("bench config: feature_dim must be at least 5");
    if (frames == 0 || n_target == 0 || n_synthetic == 0 || annotators == 0 || target_speakers == 0 ||
        synthetic_speakers == 0)
      throw DomainError("bench config: all counts must be >= 1");
    if (!(separation >= 0.0 && separation <= 1.0)) throw DomainError("bench config: separation must lie in [0, 1]");
    if (!(sigma >= 0.0) || !(shift >= 0.0) || !(speaker_sigma >= 0.0)) throw DomainError("bench config: sigma and shift must be >= 0");
    if (!unit(clean_fraction) || !unit(label_corruption) || !unit(dissent) || !unit(off_language_fraction) ||
        !unit(shift_alignment))
      throw DomainError("bench config: fractions must lie in [0, 1]");
    if (!(smoothing_alpha >= 0.0 && smoothing_alpha < 1.0))
      throw DomainError("bench config: smoothing_alpha must lie in [0, 1)");
    if (sigma == 0.0 && separation == 0.0) throw DomainError("bench config: sigma = 0 with coincident class means");
    if (dissent >= 1.0) throw DomainError("bench config: dissent must be below 1");
  }
};

enum class Provenance { kClean, kShifted, kLabelCorrupted };

inline std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kClean: return "clean";
    case Provenance::kShifted: return "shifted";
    default: return "label-corrupted";
  }
}

struct Benchmark {
  Dataset target;
  Dataset synthetic;
  std::map<std::string, Provenance> provenance;  // synthetic id -> tag
};

namespace detail {

inline std::vector<std::vector<double>> orthonormal_basis(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  while (basis.size() < count) {
    std::vector<double> v(dim);
    for (double& x : v) x = n01(rng);
    for (const auto& b : basis) {
      double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * b[j];
    }
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace detail

/// Unit-norm class means for `cfg` (rows of a 4 x d matrix).
inline std::vector<std::vector<double>> class_means(const BenchConfig& cfg, std::mt19937_64& rng) {
  auto basis = detail::orthonormal_basis(kNumClasses + 1, cfg.feature_dim, rng);
  const double a = std::sqrt(cfg.separation), b = std::sqrt(1.0 - cfg.separation);
  const double simplex = std::sqrt(static_cast<double>(kNumClasses) / (kNumClasses - 1));
  std::vector<std::vector<double>> means(kNumClasses, std::vector<double>(cfg.feature_dim, 0.0));
  for (std::size_t k = 0; k < kNumClasses; ++k)
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
      double centered = basis[k][j];
      for (std::size_t l = 0; l < kNumClasses; ++l) centered -= basis[l][j] / kNumClasses;
      means[k][j] = a * simplex * centered + b * basis[kNumClasses][j];
    }
  return means;
}

/// Deterministic in `cfg` (including cfg.seed).
inline Benchmark generate(const BenchConfig& cfg) {
  cfg.check();
  std::mt19937_64 rng(cfg.seed);
  const auto means = class_means(cfg, rng);

  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> shift_dir(cfg.feature_dim, 0.0);
  std::vector<std::vector<double>> span;
  {
    // Random unit vector in span{mu_k - mu_0}, mixed with one orthogonal to it.
    auto diffs = std::vector<std::vector<double>>();
    for (std::size_t k = 1; k < kNumClasses; ++k) {
      std::vector<double> v(cfg.feature_dim);
      for (std::size_t j = 0; j < cfg.feature_dim; ++j) v[j] = means[k][j] - means[0][j];
      diffs.push_back(std::move(v));
    }
    auto project_out = [&](std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
      for (const auto& b : basis) {
        double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * b[j];
      }
    };
    auto normalize = [](std::vector<double>& v) {
      double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      for (double& x : v) x /= norm;
      return norm;
    };
    for (auto v : diffs) {
      project_out(v, span);
      if (normalize(v) > 1e-9) span.push_back(std::move(v));
    }
    std::vector<double> inside(cfg.feature_dim, 0.0), outside(cfg.feature_dim);
    do {
      std::fill(inside.begin(), inside.end(), 0.0);
      for (const auto& b : span) {
        double g = n01(rng);
        for (std::size_t j = 0; j < cfg.feature_dim; ++j) inside[j] += g * b[j];
      }
    } while (!span.empty() && normalize(inside) < 1e-6);
    do {
      for (double& x : outside) x = n01(rng);
      project_out(outside, span);
    } while (normalize(outside) < 1e-6);
    const double a = span.empty() ? 0.0 : std::sqrt(cfg.shift_alignment);
    const double b = std::sqrt(1.0 - a * a);
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) shift_dir[j] = a * inside[j] + b * outside[j];
    normalize(shift_dir);
  }

  // Fixed derangement: corrupted samples of class k are labeled wrong_label[k].
  std::array<std::size_t, kNumClasses> wrong_label{};
  for (;;) {
    std::iota(wrong_label.begin(), wrong_label.end(), std::size_t{0});
    std::shuffle(wrong_label.begin(), wrong_label.end(), rng);
    bool ok = true;
    for (std::size_t k = 0; k < kNumClasses; ++k) ok = ok && wrong_label[k] != k;
    if (ok) break;
  }

  // Posterior over classes of the unshifted utterance under the target law,
  // computed from the frame mean (variance sigma^2 / T).
  auto posterior = [&](const std::vector<double>& frame_mean) {
    ClassProbs logp{};
    const double var = cfg.sigma * cfg.sigma / static_cast<double>(cfg.frames);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < cfg.feature_dim; ++j) d2 += (frame_mean[j] - means[k][j]) * (frame_mean[j] - means[k][j]);
      logp[k] = var > 0.0 ? -d2 / (2.0 * var) : 0.0;
      mx = std::max(mx, logp[k]);
    }
    double z = 0.0;
    for (double& v : logp) z += (v = std::exp(v - mx));
    for (double& v : logp) v /= z;
    return logp;
  };

  // Draws T frames; returns the features and the posterior of their
  // unshifted frame mean.
  auto draw = [&](std::size_t cls, bool shifted, const std::vector<double>& speaker_offset) {
    FeatureMatrix m(cfg.frames, cfg.feature_dim);
    std::vector<double> frame_mean(cfg.feature_dim, 0.0);
    for (std::size_t t = 0; t < cfg.frames; ++t)
      for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
        double v = means[cls][j] + cfg.sigma * n01(rng);
        frame_mean[j] += v / static_cast<double>(cfg.frames);
        v += speaker_offset[j];
        if (shifted) v += cfg.shift * shift_dir[j];
        m(t, j) = static_cast<float>(v);
      }
    return std::make_pair(std::move(m), posterior(frame_mean));
  };

  // Votes: each annotator picks the assigned label with probability
  // 1 - dissent; a dissenting annotator picks among the other classes in
  // proportion to the utterance's posterior. Redrawn until the assigned
  // label wins under the lowest-index tie rule.
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto soft_label_for = [&](std::size_t assigned, const ClassProbs& post) {
    std::array<double, kNumClasses> w{};
    for (std::size_t k = 0; k < kNumClasses; ++k) w[k] = k == assigned ? 0.0 : post[k] + 1e-12;
    std::discrete_distribution<std::size_t> dissent_class(w.begin(), w.end());
    for (;;) {
      std::array<unsigned, kNumClasses> votes{};
      for (std::size_t a = 0; a < cfg.annotators; ++a) ++votes[u01(rng) < cfg.dissent ? dissent_class(rng) : assigned];
      SoftLabel sl = make_soft_label(votes, cfg.smoothing_alpha);
      if (index_of(sl.argmax()) == assigned) return sl;
    }
  };

  auto speaker_name = [](const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
    return std::string(buf);
  };
  auto sample_id = [](const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, i);
    return std::string(buf);
  };

  auto offsets = [&](std::size_t count) {
    std::vector<std::vector<double>> out(count, std::vector<double>(cfg.feature_dim));
    for (auto& o : out)
      for (double& x : o) x = cfg.speaker_sigma * n01(rng);
    return out;
  };
  const auto tgt_offsets = offsets(cfg.target_speakers);
  const auto syn_offsets = offsets(cfg.synthetic_speakers);

  Benchmark bench;
  std::vector<LabeledSample> tgt;
  tgt.reserve(cfg.n_target);
  for (std::size_t i = 0; i < cfg.n_target; ++i) {
    LabeledSample s;
    s.id = sample_id("tgt", i);
    std::size_t cls = i % kNumClasses;
    s.hard_label = emotion_from_index(cls);
    const std::size_t spk = (i / kNumClasses) % cfg.target_speakers;
    s.features = draw(cls, false, tgt_offsets[spk]).first;
    s.speaker = speaker_name("tspk", spk);
    s.language = cfg.target_language;
    s.origin = Origin::kTarget;
    tgt.push_back(std::move(s));
  }

  // Exact provenance counts, assigned in a seeded random order.
  const std::size_t n = cfg.n_synthetic;
  const auto n_clean = static_cast<std::size_t>(std::llround(cfg.clean_fraction * n));
  const auto n_flip = static_cast<std::size_t>(std::llround(cfg.label_corruption * (n - n_clean)));
  const auto n_off = static_cast<std::size_t>(std::llround(cfg.off_language_fraction * n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Provenance> prov(n, Provenance::kShifted);
  for (std::size_t r = 0; r < n_clean; ++r) prov[perm[r]] = Provenance::kClean;
  for (std::size_t r = n_clean; r < n_clean + n_flip; ++r) prov[perm[r]] = Provenance::kLabelCorrupted;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<bool> off_language(n, false);
  for (std::size_t r = 0; r < n_off; ++r) off_language[perm[r]] = true;

  std::vector<LabeledSample> syn;
  syn.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledSample s;
    s.id = sample_id("syn", i);
    std::size_t cls = i % kNumClasses;
    std::size_t assigned = prov[i] == Provenance::kLabelCorrupted ? wrong_label[cls] : cls;
    const std::size_t spk = (i / kNumClasses) % cfg.synthetic_speakers;
    auto [feats, post] = draw(cls, prov[i] != Provenance::kClean, syn_offsets[spk]);
    s.features = std::move(feats);
    s.soft_label = soft_label_for(assigned, post);
    s.hard_label = emotion_from_index(assigned);
    s.speaker = speaker_name("sspk", spk);
    s.language = off_language[i] ? cfg.source_language : cfg.target_language;
    s.origin = Origin::kSynthetic;
    bench.provenance[s.id] = prov[i];
    syn.push_back(std::move(s));
  }

  bench.target = Dataset("target", cfg.feature_dim, std::move(tgt));
  bench.synthetic = Dataset("synthetic", cfg.feature_dim, std::move(syn));
  return bench;
}

/// Appends `copies` Gaussian-jittered versions of every sample (ids suffixed
/// "#noiseN"); labels are unchanged.
inline Dataset noise_augment(const Dataset& ds, double sigma_n, std::size_t copies, std::uint64_t seed = 0) {
  if (!(sigma_n >= 0.0)) throw DomainError("noise_augment: sigma must be >= 0");
  std::vector<LabeledSample> out(ds.samples());
  out.reserve(ds.size() * (1 + copies));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t c = 1; c <= copies; ++c) {
    for (const auto& s : ds) {
      LabeledSample j = s;
      j.id = s.id + "#noise" + std::to_string(c);
      for (std::size_t t = 0; t < j.features.rows(); ++t)
        for (std::size_t d = 0; d < j.features.cols(); ++d)
          j.features(t, d) = static_cast<float>(static_cast<double>(j.features(t, d)) + sigma_n * n01(rng));
      out.push_back(std::move(j));
    }
  }
  return Dataset(ds.name(), ds.feature_dim(), std::move(out));
}

/// Feature-level CopyPaste: every non-neutral sample gets `copies` variants
/// whose frames are its own followed by those of a randomly drawn neutral
/// sample. Label, speaker and language follow the emotional sample.
inline Dataset copypaste_augment(const Dataset& ds, std::size_t copies, std::uint64_t seed) {
  if (copies == 0) return ds;
  std::vector<std::size_t> neutral;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds[i].hard_label == Emotion::kNeutral) neutral.push_back(i);
  if (neutral.empty()) throw DomainError("copypaste_augment: no neutral samples");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, neutral.size() - 1);
  std::vector<LabeledSample> out(ds.samples());
  for (const auto& s : ds) {
    if (s.hard_label == Emotion::kNeutral) continue;
    for (std::size_t c = 1; c <= copies; ++c) {
      const auto& nb = ds[neutral[pick(rng)]];
      const std::size_t t1 = s.features.rows(), t2 = nb.features.rows(), d = s.features.cols();
      std::vector<float> data;
      data.reserve((t1 + t2) * d);
      data.insert(data.end(), s.features.data().begin(), s.features.data().end());
      data.insert(data.end(), nb.features.data().begin(), nb.features.data().end());
      LabeledSample j = s;
      j.id = s.id + "#cp" + std::to_string(c);
      j.features = FeatureMatrix(t1 + t2, d, std::move(data));
      out.push_back(std::move(j));
    }
  }
  return Dataset(ds.name(), ds.feature_dim(), std::move(out));
}

struct SelectionQuality {
  std::optional<double> precision;  // absent for an empty selection
  std::optional<double> recall;     // absent when there are no clean samples
};

/// Precision and recall of a selection with respect to the "clean" tag.
inline SelectionQuality selection_quality(const SelectionRound& round,
                                          const std::map<std::string, Provenance>& provenance) {
  std::size_t clean_total = 0, clean_selected = 0;
  for (const auto& [id, p] : provenance) clean_total += p == Provenance::kClean;
  for (const auto& id : round.selected_ids) {
    auto it = provenance.find(id);
    if (it == provenance.end()) throw DomainError("selection_quality: no provenance for " + id);
    clean_selected += it->second == Provenance::kClean;
  }
  SelectionQuality q;
  if (!round.selected_ids.empty()) q.precision = static_cast<double>(clean_selected) / round.selected_ids.size();
  if (clean_total > 0) q.recall = static_cast<double>(clean_selected) / clean_total;
  return q;
}

}  // namespace bootsel
