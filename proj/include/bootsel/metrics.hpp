// bootsel/metrics.hpp

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
#include <cstddef>
#include <span>

#include "bootsel/common.hpp"
#include "bootsel/emotion.hpp"

namespace bootsel {

using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  // [true][pred]

struct Metrics {
  double ua = 0.0;  // mean per-class recall
  double wa = 0.0;  // overall accuracy
  double f1 = 0.0;  // macro F1
  Confusion confusion{};

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// UA, WA and macro-F1. Classes that do not occur in `labels` are left out
/// of the UA and F1 averages; a class with precision + recall = 0 has F1 0.
inline Metrics compute_metrics(std::span<const Emotion> labels, std::span<const Emotion> preds) {
  if (labels.empty()) throw DomainError("compute_metrics: empty input");
  if (labels.size() != preds.size()) throw DomainError("compute_metrics: length mismatch");
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) ++m.confusion[index_of(labels[i])][index_of(preds[i])];

  std::size_t correct = 0, present = 0;
  double recall_sum = 0.0, f1_sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t support = 0, predicted = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      support += m.confusion[c][k];
      predicted += m.confusion[k][c];
    }
    const std::size_t tp = m.confusion[c][c];
    correct += tp;
    if (support == 0) continue;
    ++present;
    double recall = static_cast<double>(tp) / support;
    double precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
    recall_sum += recall;
    f1_sum += (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  m.wa = static_cast<double>(correct) / labels.size();
  m.ua = recall_sum / present;
  m.f1 = f1_sum / present;
  return m;
}

}  // namespace bootsel
