// bootsel/net.hpp

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

// Utterance-level emotion classifier operating on frozen upstream features:
//
//    h_t    = relu(W1 x_t + b1)          per frame, W1 is hidden x dim
//    pooled = pool_t(h_t)                mean (default) or max over frames
//    probs  = softmax(W2 pooled + b2)    W2 is 4 x hidden
//
// trained with cross-entropy and an adaptive-moment optimizer. All parameter
// arithmetic is binary64.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bootsel/common.hpp"
#include "bootsel/dataset.hpp"
#include "bootsel/emotion.hpp"
#include "bootsel/feature_io.hpp"
#include "json.hpp"

namespace bootsel {

enum class Pooling { kMean, kMax };
enum class LabelMode { kHard, kSoft };

struct TrainConfig {
  std::size_t hidden_dim = 256;
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  LabelMode label_mode = LabelMode::kHard;
  Pooling pooling = Pooling::kMean;

  void check() const {
    if (hidden_dim == 0) throw DomainError("train config: hidden_dim must be positive");
    if (!(learning_rate > 0.0)) throw DomainError("train config: learning_rate must be positive");
    if (epochs == 0) throw DomainError("train config: epochs must be >= 1");
    if (batch_size == 0) throw DomainError("train config: batch_size must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw DomainError("train config: moment decay rates must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw DomainError("train config: epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw DomainError("train config: weight_decay must be non-negative");
  }
};

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["hidden_dim"] = c.hidden_dim;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["label_mode"] = c.label_mode == LabelMode::kHard ? "hard" : "soft";
  j["pooling"] = c.pooling == Pooling::kMean ? "mean" : "max";
  return j;
}

/// Parameters of the classifier head. Also used as the gradient container.
struct Model {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Pooling pooling = Pooling::kMean;
  std::vector<double> w1;  // hidden x input, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // 4 x hidden, row-major
  std::vector<double> b2;  // 4

  static Model zeros(std::size_t input_dim, std::size_t hidden_dim, Pooling pooling = Pooling::kMean) {
    Model m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.pooling = pooling;
    m.w1.assign(hidden_dim * input_dim, 0.0);
    m.b1.assign(hidden_dim, 0.0);
    m.w2.assign(kNumClasses * hidden_dim, 0.0);
    m.b2.assign(kNumClasses, 0.0);
    return m;
  }

  std::size_t num_params() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  // Flat view over all parameters in (w1, b1, w2, b2) order.
  double& param(std::size_t i) {
    if (i < w1.size()) return w1[i];
    i -= w1.size();
    if (i < b1.size()) return b1[i];
    i -= b1.size();
    if (i < w2.size()) return w2[i];
    return b2[i - w2.size()];
  }
  double param(std::size_t i) const { return const_cast<Model&>(*this).param(i); }

  friend bool operator==(const Model&, const Model&) = default;
};

namespace detail {

// Per-example intermediate values kept for backprop.
struct ForwardTrace {
  std::vector<double> pre;     // T x hidden pre-activations
  std::vector<double> pooled;  // hidden
  std::vector<std::size_t> max_frame;  // hidden, max pooling only
  ClassProbs logits{};
  ClassProbs probs{};
};

inline void forward_into(const Model& m, const FeatureMatrix& x, ForwardTrace& tr) {
  if (x.cols() != m.input_dim)
    throw DomainError("forward: feature dim " + std::to_string(x.cols()) + " does not match model input dim " +
                      std::to_string(m.input_dim));
  if (x.rows() == 0) throw DomainError("forward: empty feature matrix");
  const std::size_t T = x.rows(), H = m.hidden_dim, D = m.input_dim;
  tr.pre.resize(T * H);
  tr.pooled.assign(H, m.pooling == Pooling::kMean ? 0.0 : -1.0);
  if (m.pooling == Pooling::kMax) tr.max_frame.assign(H, 0);
  for (std::size_t t = 0; t < T; ++t) {
    auto xt = x.row(t);
    double* pre = tr.pre.data() + t * H;
    for (std::size_t h = 0; h < H; ++h) {
      const double* w = m.w1.data() + h * D;
      double acc = m.b1[h];
      for (std::size_t j = 0; j < D; ++j) acc += w[j] * static_cast<double>(xt[j]);
      pre[h] = acc;
      double act = acc > 0.0 ? acc : 0.0;
      if (m.pooling == Pooling::kMean) {
        tr.pooled[h] += act;
      } else if (act > tr.pooled[h]) {
        tr.pooled[h] = act;
        tr.max_frame[h] = t;
      }
    }
  }
  if (m.pooling == Pooling::kMean) {
    const double inv = 1.0 / static_cast<double>(T);
    for (double& p : tr.pooled) p *= inv;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double* w = m.w2.data() + c * H;
    double acc = m.b2[c];
    for (std::size_t h = 0; h < H; ++h) acc += w[h] * tr.pooled[h];
    tr.logits[c] = acc;
    mx = std::max(mx, acc);
  }
  if (!std::isfinite(mx)) throw DomainError("forward: non-finite activation");
  double z = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) z += (tr.probs[c] = std::exp(tr.logits[c] - mx));
  for (double& p : tr.probs) p /= z;
}

}  // namespace detail

/// Class posterior for one utterance.
inline ClassProbs forward(const Model& model, const FeatureMatrix& features) {
  detail::ForwardTrace tr;
  detail::forward_into(model, features, tr);
  return tr.probs;
}

struct TrainExample {
  const FeatureMatrix* features = nullptr;
  ClassProbs target{};  // one-hot for hard labels
};

inline constexpr double kProbFloor = 1e-12;

struct LossAndGrad {
  double loss = 0.0;
  Model grad;
};

/// Mean cross-entropy over `batch` and its exact gradient. Probabilities are
/// floored at 1e-12 inside the log only.
inline LossAndGrad loss_and_grad(const Model& m, std::span<const TrainExample> batch) {
  if (batch.empty()) throw DomainError("loss_and_grad: empty batch");
  const std::size_t H = m.hidden_dim, D = m.input_dim;
  LossAndGrad out{0.0, Model::zeros(D, H, m.pooling)};
  Model& g = out.grad;
  detail::ForwardTrace tr;
  std::vector<double> dpooled(H);
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (const auto& ex : batch) {
    detail::forward_into(m, *ex.features, tr);
    ClassProbs dlogits{};
    double tsum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      out.loss -= ex.target[c] * std::log(std::max(tr.probs[c], kProbFloor));
      tsum += ex.target[c];
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) dlogits[c] = (tsum * tr.probs[c] - ex.target[c]) * scale;

    std::fill(dpooled.begin(), dpooled.end(), 0.0);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      g.b2[c] += dlogits[c];
      double* gw = g.w2.data() + c * H;
      const double* w = m.w2.data() + c * H;
      for (std::size_t h = 0; h < H; ++h) {
        gw[h] += dlogits[c] * tr.pooled[h];
        dpooled[h] += dlogits[c] * w[h];
      }
    }

    const FeatureMatrix& x = *ex.features;
    const std::size_t T = x.rows();
    if (m.pooling == Pooling::kMean) {
      const double inv = 1.0 / static_cast<double>(T);
      for (std::size_t t = 0; t < T; ++t) {
        auto xt = x.row(t);
        const double* pre = tr.pre.data() + t * H;
        for (std::size_t h = 0; h < H; ++h) {
          if (pre[h] <= 0.0) continue;
          double dh = dpooled[h] * inv;
          g.b1[h] += dh;
          double* gw = g.w1.data() + h * D;
          for (std::size_t j = 0; j < D; ++j) gw[j] += dh * static_cast<double>(xt[j]);
        }
      }
    } else {
      for (std::size_t h = 0; h < H; ++h) {
        std::size_t t = tr.max_frame[h];
        if (tr.pre[t * H + h] <= 0.0) continue;
        auto xt = x.row(t);
        g.b1[h] += dpooled[h];
        double* gw = g.w1.data() + h * D;
        for (std::size_t j = 0; j < D; ++j) gw[j] += dpooled[h] * static_cast<double>(xt[j]);
      }
    }
  }
  out.loss *= scale;
  return out;
}

/// Training diverged; carries where it happened.
class TrainingError : public DomainError {
 public:
  TrainingError(std::size_t epoch, std::size_t batch, const std::string& what)
      : DomainError(what + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")"),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_, batch_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for every tensor.
template <typename Rng>
Model init_model(std::size_t input_dim, std::size_t hidden_dim, Pooling pooling, Rng& rng) {
  Model m = Model::zeros(input_dim, hidden_dim, pooling);
  auto fill = [&](std::vector<double>& v, std::size_t fan_in) {
    double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-a, a);
    for (double& x : v) x = u(rng);
  };
  fill(m.w1, input_dim);
  fill(m.b1, input_dim);
  fill(m.w2, hidden_dim);
  fill(m.b2, hidden_dim);
  return m;
}

/// Trains a fresh model on `train_set`. Deterministic in (cfg, sample order):
/// one mt19937_64 stream seeded with cfg.seed drives initialization and then
/// the per-epoch shuffles.
inline Model train(const Dataset& train_set, const TrainConfig& cfg) {
  cfg.check();
  if (train_set.empty()) throw DomainError("train: empty training set");
  const std::size_t D = train_set.feature_dim();
  for (const auto& s : train_set)
    if (s.features.cols() != D) throw DomainError("train: sample " + s.id + " has mismatched feature dim");

  std::mt19937_64 rng(cfg.seed);
  Model m = init_model(D, cfg.hidden_dim, cfg.pooling, rng);

  std::vector<TrainExample> examples;
  examples.reserve(train_set.size());
  for (const auto& s : train_set) examples.push_back({&s.features, s.target(cfg.label_mode == LabelMode::kSoft)});

  const std::size_t P = m.num_params();
  std::vector<double> mom1(P, 0.0), mom2(P, 0.0);
  std::vector<std::size_t> order(examples.size());
  std::vector<TrainExample> batch;
  batch.reserve(cfg.batch_size);
  std::uint64_t step = 0;
  const std::size_t wd_end = m.w1.size();                  // w1 is decayed
  const std::size_t w2_begin = m.w1.size() + m.b1.size();  // and so is w2
  const std::size_t w2_end = w2_begin + m.w2.size();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(examples[order[k]]);
      LossAndGrad lg = loss_and_grad(m, batch);
      if (!std::isfinite(lg.loss)) throw TrainingError(epoch, b, "train: non-finite loss");

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < P; ++i) {
        const double gi = lg.grad.param(i);
        mom1[i] = cfg.beta1 * mom1[i] + (1.0 - cfg.beta1) * gi;
        mom2[i] = cfg.beta2 * mom2[i] + (1.0 - cfg.beta2) * gi * gi;
        double& p = m.param(i);
        if (cfg.weight_decay > 0.0 && (i < wd_end || (i >= w2_begin && i < w2_end)))
          p -= cfg.learning_rate * cfg.weight_decay * p;
        p -= cfg.learning_rate * (mom1[i] / c1) / (std::sqrt(mom2[i] / c2) + cfg.epsilon);
      }
    }
  }
  return m;
}

struct Prediction {
  std::string id;
  ClassProbs probs{};
  Emotion label = Emotion::kAngry;
};

inline std::vector<Prediction> predict(const Model& model, const Dataset& ds) {
  std::vector<Prediction> out;
  out.reserve(ds.size());
  detail::ForwardTrace tr;
  for (const auto& s : ds) {
    detail::forward_into(model, s.features, tr);
    out.push_back({s.id, tr.probs, argmax_label(tr.probs)});
  }
  return out;
}

inline std::string config_hash(const TrainConfig& cfg) { return hex64(fnv1a64(to_json(cfg).dump())); }

/// Checkpoint: four feature-format blocks (w1, b1, w2, b2) in `path` plus a
/// JSON sidecar at `path` + ".json". Parameters are narrowed to binary32.
inline void save_model(const Model& m, const TrainConfig& cfg, const fs::path& path) {
  auto block = [](const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    std::vector<float> f(v.begin(), v.end());
    return FeatureMatrix(rows, cols, std::move(f));
  };
  std::ostringstream os(std::ios::binary);
  write_feature_block(os, block(m.w1, m.hidden_dim, m.input_dim));
  write_feature_block(os, block(m.b1, m.hidden_dim, 1));
  write_feature_block(os, block(m.w2, kNumClasses, m.hidden_dim));
  write_feature_block(os, block(m.b2, kNumClasses, 1));
  detail::write_file_atomic(path, os.str());

  nlohmann::ordered_json side;
  side["input_dim"] = m.input_dim;
  side["hidden_dim"] = m.hidden_dim;
  side["num_classes"] = kNumClasses;
  side["pooling"] = m.pooling == Pooling::kMean ? "mean" : "max";
  side["config_hash"] = config_hash(cfg);
  side["version"] = kVersion;
  fs::path sidecar = path;
  sidecar += ".json";
  detail::write_file_atomic(sidecar, side.dump(2) + "\n");
}

inline Model load_model(const fs::path& path) {
  fs::path sidecar = path;
  sidecar += ".json";
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(detail::read_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint sidecar " + sidecar.string() + ": " + e.what());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  Model m = Model::zeros(side.at("input_dim").get<std::size_t>(), side.at("hidden_dim").get<std::size_t>(),
                         side.at("pooling").get<std::string>() == "max" ? Pooling::kMax : Pooling::kMean);
  auto read = [&](std::vector<double>& v, std::size_t rows, std::size_t cols) {
    FeatureMatrix f = read_feature_block(in, path.string());
    if (f.rows() != rows || f.cols() != cols) throw IoError("checkpoint tensor shape mismatch: " + path.string());
    v.assign(f.data().begin(), f.data().end());
  };
  read(m.w1, m.hidden_dim, m.input_dim);
  read(m.b1, m.hidden_dim, 1);
  read(m.w2, kNumClasses, m.hidden_dim);
  read(m.b2, kNumClasses, 1);
  return m;
}

}  // namespace bootsel
