// tests/oracles.hpp

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

// Test-only reference implementations. None of these call into the code
// paths they are used to check; they are deliberately naive.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bootsel/bootstrap.hpp"
#include "bootsel/dataset.hpp"
#include "bootsel/net.hpp"

namespace bootsel::oracle {

/// Forward pass in long double with explicit per-frame hidden vectors.
inline std::array<long double, kNumClasses> forward_ld(const Model& m, const FeatureMatrix& x) {
  const std::size_t H = m.hidden_dim, D = m.input_dim, T = x.rows();
  std::vector<std::vector<long double>> hidden(T, std::vector<long double>(H));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t h = 0; h < H; ++h) {
      long double a = m.b1[h];
      for (std::size_t j = 0; j < D; ++j) a += static_cast<long double>(m.w1[h * D + j]) * x(t, j);
      hidden[t][h] = a > 0 ? a : 0;
    }
  std::vector<long double> pooled(H, 0);
  for (std::size_t h = 0; h < H; ++h) {
    if (m.pooling == Pooling::kMean) {
      for (std::size_t t = 0; t < T; ++t) pooled[h] += hidden[t][h];
      pooled[h] /= T;
    } else {
      pooled[h] = hidden[0][h];
      for (std::size_t t = 1; t < T; ++t) pooled[h] = std::max(pooled[h], hidden[t][h]);
    }
  }
  std::array<long double, kNumClasses> logits{}, out{};
  long double z = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    logits[c] = m.b2[c];
    for (std::size_t h = 0; h < H; ++h) logits[c] += static_cast<long double>(m.w2[c * H + h]) * pooled[h];
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) z += std::exp(logits[c]);
  for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = std::exp(logits[c]) / z;
  return out;
}

inline long double loss_ld(const Model& m, const std::vector<TrainExample>& batch) {
  long double total = 0;
  for (const auto& ex : batch) {
    auto p = forward_ld(m, *ex.features);
    for (std::size_t c = 0; c < kNumClasses; ++c)
      total -= ex.target[c] * std::log(std::max<long double>(p[c], 1e-12L));
  }
  return total / batch.size();
}

struct BruteMetrics {
  double ua, wa, f1;
};

/// Per-class counting straight from the definitions, one pass per class.
inline BruteMetrics metrics(const std::vector<int>& labels, const std::vector<int>& preds) {
  const std::size_t n = labels.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += labels[i] == preds[i];
  double rec = 0, f1 = 0;
  int present = 0;
  for (int c = 0; c < 4; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] == c && preds[i] == c) ++tp;
      if (labels[i] != c && preds[i] == c) ++fp;
      if (labels[i] == c && preds[i] != c) ++fn;
    }
    if (tp + fn == 0) continue;
    ++present;
    double r = double(tp) / double(tp + fn);
    double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    rec += r;
    f1 += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  return {rec / present, double(correct) / double(n), f1 / present};
}

inline double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline long double kl_ld(const ClassProbs& p, const ClassProbs& q) {
  long double pp[4], qq[4], sp = 0, sq = 0;
  for (int c = 0; c < 4; ++c) {
    pp[c] = std::min<long double>(1, std::max<long double>(1e-12L, p[c]));
    qq[c] = std::min<long double>(1, std::max<long double>(1e-12L, q[c]));
    sp += pp[c];
    sq += qq[c];
  }
  long double kl = 0;
  for (int c = 0; c < 4; ++c) kl += (pp[c] / sp) * std::log((pp[c] / sp) / (qq[c] / sq));
  return kl;
}

inline int first_max(const std::array<long double, 4>& v) {
  int best = 0;
  for (int c = 1; c < 4; ++c)
    if (v[c] > v[best]) best = c;
  return best;
}

inline int first_max(const ClassProbs& v) {
  int best = 0;
  for (int c = 1; c < 4; ++c)
    if (v[c] > v[best]) best = c;
  return best;
}

/// Re-derives the selected id set: recompute every prediction in long double,
/// every KL, and the median by full sort.
inline std::set<std::string> naive_selection(const Model& m, const Dataset& d_syn, Criterion crit) {
  std::set<std::string> out;
  std::vector<ClassProbs> preds;
  for (const auto& s : d_syn) {
    auto p = forward_ld(m, s.features);
    preds.push_back({double(p[0]), double(p[1]), double(p[2]), double(p[3])});
  }
  if (crit == Criterion::kChi1) {
    for (std::size_t i = 0; i < d_syn.size(); ++i)
      if (first_max(preds[i]) == int(index_of(d_syn[i].hard_label))) out.insert(d_syn[i].id);
    return out;
  }
  std::vector<double> kls;
  for (std::size_t i = 0; i < d_syn.size(); ++i) kls.push_back(double(kl_ld(preds[i], d_syn[i].soft_label->probs())));
  double med = sorted_median(kls);
  for (std::size_t i = 0; i < d_syn.size(); ++i)
    if (first_max(preds[i]) == first_max(d_syn[i].soft_label->probs()) && kls[i] < med) out.insert(d_syn[i].id);
  return out;
}

inline Model random_model(std::size_t d, std::size_t h, std::mt19937_64& rng, double scale = 0.5,
                          Pooling pooling = Pooling::kMean) {
  std::normal_distribution<double> n(0.0, scale);
  Model m = Model::zeros(d, h, pooling);
  for (std::size_t i = 0; i < m.num_params(); ++i) m.param(i) = n(rng);
  return m;
}

inline FeatureMatrix random_features(std::size_t t, std::size_t d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  FeatureMatrix x(t, d);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = static_cast<float>(n(rng));
  return x;
}

inline ClassProbs random_distribution(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  ClassProbs p{};
  double s = 0;
  for (auto& v : p) s += (v = g(rng) + 1e-9);
  for (auto& v : p) v /= s;
  return p;
}

/// Relative error used by the gradient check; absolute near zero.
inline double grad_rel_error(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

/// Central-difference derivative of the long double loss w.r.t. parameter i.
inline double fd_grad(Model m, const std::vector<TrainExample>& batch, std::size_t i, double step = 1e-5) {
  const double orig = m.param(i);
  m.param(i) = orig + step;
  long double up = loss_ld(m, batch);
  m.param(i) = orig - step;
  long double down = loss_ld(m, batch);
  return double((up - down) / (2.0L * step));
}

}  // namespace bootsel::oracle
