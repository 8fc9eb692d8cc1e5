// bootsel/dataset.hpp

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

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bootsel/common.hpp"
#include "bootsel/emotion.hpp"

namespace bootsel {

/// Row-major T x d matrix of frame features. Values are stored in binary32,
/// the precision of the on-disk format; all arithmetic widens to double.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw DomainError("FeatureMatrix: data size does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::span<const float> row(std::size_t t) const { return {data_.data() + t * cols_, cols_}; }
  std::span<float> row(std::size_t t) { return {data_.data() + t * cols_, cols_}; }
  float operator()(std::size_t t, std::size_t j) const { return data_[t * cols_ + j]; }
  float& operator()(std::size_t t, std::size_t j) { return data_[t * cols_ + j]; }

  std::span<const float> data() const { return data_; }

  bool all_finite() const {
    for (float v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

enum class Origin { kTarget, kSynthetic };

inline std::string_view origin_name(Origin o) { return o == Origin::kTarget ? "target" : "synthetic"; }

inline std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "target") return Origin::kTarget;
  if (s == "synthetic") return Origin::kSynthetic;
  return std::nullopt;
}

struct LabeledSample {
  std::string id;
  FeatureMatrix features;
  Emotion hard_label = Emotion::kAngry;
  std::optional<SoftLabel> soft_label;
  std::string speaker;
  std::string language;
  Origin origin = Origin::kTarget;

  /// Training target: the soft label when present and requested, otherwise
  /// the one-hot hard label.
  ClassProbs target(bool use_soft) const {
    if (use_soft && soft_label) return soft_label->probs();
    return one_hot(hard_label);
  }
};

/// Ordered, immutable collection of samples sharing one feature dimension.
/// Construction does not validate; call validate_dataset() for that.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::size_t feature_dim, std::vector<LabeledSample> samples)
      : name_(std::move(name)), feature_dim_(feature_dim), samples_(std::move(samples)) {}

  const std::string& name() const { return name_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  /// New dataset holding the samples at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices, std::string name) const {
    std::vector<LabeledSample> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(samples_.at(i));
    return Dataset(std::move(name), feature_dim_, std::move(out));
  }

  template <typename Pred>
  Dataset filter(Pred&& keep, std::string name) const {
    std::vector<LabeledSample> out;
    for (const auto& s : samples_)
      if (keep(s)) out.push_back(s);
    return Dataset(std::move(name), feature_dim_, std::move(out));
  }

 private:
  std::string name_;
  std::size_t feature_dim_ = 0;
  std::vector<LabeledSample> samples_;
};

/// Concatenation a ++ b. Fails on duplicate ids or mismatched dims; an empty
/// side adopts the other's dimension.
inline Dataset concat(const Dataset& a, const Dataset& b, std::string name) {
  if (!a.empty() && !b.empty() && a.feature_dim() != b.feature_dim())
    throw DomainError("concat: feature dimension mismatch");
  std::unordered_set<std::string> ids;
  std::vector<LabeledSample> out;
  out.reserve(a.size() + b.size());
  for (const Dataset* ds : {&a, &b}) {
    for (const auto& s : *ds) {
      if (!ids.insert(s.id).second) throw DomainError("concat: duplicate sample id " + s.id);
      out.push_back(s);
    }
  }
  std::size_t dim = a.empty() ? b.feature_dim() : a.feature_dim();
  return Dataset(std::move(name), dim, std::move(out));
}

struct Violation {
  std::string sample_id;
  std::string rule;
  std::string message() const { return rule + " " + sample_id; }
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every broken dataset invariant, in sample order. Empty means valid.
inline std::vector<Violation> validate_dataset(const Dataset& ds) {
  std::vector<Violation> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : ds) {
    if (s.id.empty()) out.push_back({s.id, "empty id"});
    if (!seen.insert(s.id).second) out.push_back({s.id, "duplicate id"});
    if (s.features.rows() == 0 || s.features.cols() == 0) out.push_back({s.id, "empty feature matrix"});
    if (s.features.cols() != ds.feature_dim()) out.push_back({s.id, "feature dimension mismatch"});
    if (!s.features.all_finite()) out.push_back({s.id, "non-finite feature value"});
    if (s.soft_label && s.soft_label->argmax() != s.hard_label)
      out.push_back({s.id, "soft label argmax differs from hard label"});
  }
  return out;
}

}  // namespace bootsel
