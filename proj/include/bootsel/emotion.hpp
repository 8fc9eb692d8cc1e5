// bootsel/emotion.hpp

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

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "bootsel/common.hpp"

namespace bootsel {

inline constexpr std::size_t kNumClasses = 4;

/// Four-way categorical emotion. The numeric order is part of every on-disk
/// format and must not change.
enum class Emotion : std::uint8_t { kAngry = 0, kHappy = 1, kNeutral = 2, kSad = 3 };

/// A distribution (or score vector) over the four emotion classes.
using ClassProbs = std::array<double, kNumClasses>;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "angry", "happy", "neutral", "sad"};

inline std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }

inline Emotion emotion_from_index(std::size_t i) {
  if (i >= kNumClasses) throw DomainError("emotion index out of range: " + std::to_string(i));
  return static_cast<Emotion>(i);
}

inline std::string_view class_name(Emotion e) { return kClassNames[index_of(e)]; }

inline std::optional<Emotion> parse_class(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i)
    if (kClassNames[i] == name) return static_cast<Emotion>(i);
  return std::nullopt;
}

/// Index of the largest entry; ties go to the lowest index.
inline Emotion argmax_label(const ClassProbs& dist) {
  std::size_t best = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (std::isnan(dist[c])) throw DomainError("argmax_label: NaN entry");
    if (dist[c] > dist[best]) best = c;
  }
  return static_cast<Emotion>(best);
}

/// Annotator-vote distribution with label smoothing applied. Instances are
/// only produced by make_soft_label() or from_probs(), both of which check
/// normalization.
class SoftLabel {
 public:
  static SoftLabel from_probs(const ClassProbs& probs) {
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0) throw DomainError("soft label entries must be finite and non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw DomainError("soft label does not sum to 1");
    return SoftLabel(probs);
  }

  const ClassProbs& probs() const { return probs_; }
  double operator[](std::size_t c) const { return probs_[c]; }
  Emotion argmax() const { return argmax_label(probs_); }

  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

 private:
  explicit SoftLabel(const ClassProbs& p) : probs_(p) {}
  friend SoftLabel make_soft_label(const std::array<unsigned, kNumClasses>&, double);
  ClassProbs probs_{};
};

/// probs = (1 - alpha) * votes / sum(votes) + alpha / 4.
inline SoftLabel make_soft_label(const std::array<unsigned, kNumClasses>& votes, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("smoothing alpha must lie in [0, 1)");
  double total = 0.0;
  for (unsigned v : votes) total += v;
  if (total == 0.0) throw DomainError("no annotator votes");
  ClassProbs p{};
  for (std::size_t c = 0; c < kNumClasses; ++c)
    p[c] = (1.0 - alpha) * (votes[c] / total) + alpha / kNumClasses;
  return SoftLabel(p);
}

inline ClassProbs one_hot(Emotion e) {
  ClassProbs p{};
  p[index_of(e)] = 1.0;
  return p;
}

}  // namespace bootsel
