// tests/test_bootstrap.cpp

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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "bootsel/bootstrap.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bootsel {
namespace {

TEST(Kl, IdenticalDistributionsGiveZero) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 500; ++i) {
    auto p = oracle::random_distribution(rng);
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-9);
  }
}

TEST(Kl, HalfHalfAgainstUniform) {
  EXPECT_NEAR(kl_divergence({0.5, 0.5, 0, 0}, {0.25, 0.25, 0.25, 0.25}), std::log(2.0), 1e-6);
}

TEST(Kl, UniformAgainstPeakedMatchesLongDouble) {
  const double eps = 1e-6;
  ClassProbs p{0.25, 0.25, 0.25, 0.25};
  ClassProbs q{0.5 - eps, 0.5 - eps, eps, eps};
  double got = kl_divergence(p, q);
  EXPECT_GT(got, 0.0);
  EXPECT_NEAR(got, double(oracle::kl_ld(p, q)), 1e-12);
}

TEST(Kl, NonNegativeAndMatchesOracle) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 2000; ++i) {
    auto p = oracle::random_distribution(rng), q = oracle::random_distribution(rng);
    if (i % 7 == 0) p[rng() % 4] = 0.0;
    double got = kl_divergence(p, q);
    EXPECT_GE(got, -1e-9);
    EXPECT_NEAR(got, double(oracle::kl_ld(p, q)), 1e-9);
  }
}

TEST(Median, Examples) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({1, 2, 3, 4}), 2.5);
  EXPECT_THROW(median({}), DomainError);
}

TEST(Median, RandomMatchesSortOracle) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> n(0, 3);
  for (std::size_t len : {1u, 2u, 7u, 64u, 1000u, 1001u}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> v(len);
      for (auto& x : v) x = n(rng);
      EXPECT_EQ(median(v), oracle::sorted_median(v));
    }
  }
}

TEST(Chi1, Examples) {
  EXPECT_TRUE(chi1({0.1, 0.7, 0.1, 0.1}, Emotion::kHappy));
  EXPECT_FALSE(chi1({0.4, 0.3, 0.2, 0.1}, Emotion::kNeutral));
  EXPECT_TRUE(chi1({0.25, 0.25, 0.25, 0.25}, Emotion::kAngry));
}

TEST(Chi2, Examples) {
  auto soft = make_soft_label({1, 3, 0, 0}, 0.05);
  EXPECT_TRUE(chi2(soft.probs(), soft, 1e-6));
  ClassProbs pred{0.1, 0.6, 0.2, 0.1};
  double kl = kl_divergence(pred, soft.probs());
  EXPECT_FALSE(chi2(pred, soft, kl));
  EXPECT_TRUE(chi2(pred, soft, std::nextafter(kl, 1.0)));
  EXPECT_FALSE(chi2({0.6, 0.1, 0.2, 0.1}, soft, 100.0));
}

Dataset random_syn(std::size_t n, std::size_t d, std::mt19937_64& rng, bool soft = true) {
  std::vector<LabeledSample> v;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<unsigned, 4> votes{};
    for (int a = 0; a < 5; ++a) ++votes[rng() % 4];
    auto sl = make_soft_label(votes, 0.05);
    auto s = testing::make_sample("syn" + std::to_string(i), sl.argmax(), oracle::random_features(1 + rng() % 3, d, rng),
                                  "sp" + std::to_string(i % 5), "de", Origin::kSynthetic);
    if (soft) s.soft_label = sl;
    v.push_back(std::move(s));
  }
  return Dataset("syn", d, v);
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

TEST(SelectRound, TwentySamplesMatchBruteForce) {
  std::mt19937_64 rng(44);
  Dataset syn = random_syn(20, 4, rng);
  Model m = oracle::random_model(4, 6, rng, 0.8);
  for (Criterion c : {Criterion::kChi1, Criterion::kChi2}) {
    auto round = select_round(m, syn, c);
    EXPECT_EQ(as_set(round.selected_ids), oracle::naive_selection(m, syn, c));
    EXPECT_EQ(round.kept, round.selected_ids.size());
    EXPECT_EQ(round.total, 20u);
  }
}

TEST(SelectRound, ModelAgreeingWithEveryLabelKeepsAllUnderChi1) {
  std::mt19937_64 rng(45);
  std::vector<LabeledSample> v;
  for (int i = 0; i < 12; ++i) {
    FeatureMatrix x(1, 4);
    x(0, i % 4) = 1.0f;
    v.push_back(testing::make_sample("s" + std::to_string(i), emotion_from_index(i % 4), std::move(x)));
  }
  Dataset syn("syn", 4, v);
  Model m = Model::zeros(4, 4);
  for (std::size_t h = 0; h < 4; ++h) {
    m.w1[h * 4 + h] = 1.0;
    m.w2[h * 4 + h] = 5.0;
  }
  EXPECT_EQ(select_round(m, syn, Criterion::kChi1).kept, 12u);
}

TEST(SelectRound, UniformModelKeepsFirstClassBelowMedian) {
  std::vector<LabeledSample> v;
  const std::vector<std::array<unsigned, 4>> votes = {{5, 0, 0, 0}, {4, 1, 0, 0}, {3, 1, 1, 0}, {2, 1, 1, 1},
                                                      {0, 5, 0, 0}, {1, 4, 0, 0}, {0, 1, 3, 1}, {1, 1, 1, 2},
                                                      {0, 0, 0, 5}, {3, 0, 0, 2}};
  for (std::size_t i = 0; i < votes.size(); ++i) {
    auto sl = make_soft_label(votes[i], 0.05);
    auto s = testing::make_sample("s" + std::to_string(i), sl.argmax(), testing::const_row(3, float(i)));
    s.soft_label = sl;
    v.push_back(std::move(s));
  }
  Dataset syn("syn", 3, v);
  Model m = Model::zeros(3, 2);
  auto round = select_round(m, syn, Criterion::kChi2);
  EXPECT_EQ(as_set(round.selected_ids), oracle::naive_selection(m, syn, Criterion::kChi2));
  for (const auto& id : round.selected_ids) {
    const auto& s = syn[std::stoul(id.substr(1))];
    EXPECT_EQ(s.soft_label->argmax(), Emotion::kAngry);
  }
  EXPECT_EQ(round.selected_ids, (std::vector<std::string>{"s2", "s3", "s9"}));
}

TEST(SelectRound, Chi2WithoutSoftLabelsFailsBeforeCompute) {
  std::mt19937_64 rng(46);
  Dataset syn = random_syn(5, 3, rng, false);
  // Input dim mismatch would throw a different error if compute started.
  Model m = Model::zeros(7, 2);
  try {
    select_round(m, syn, Criterion::kChi2);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("soft label"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("chi1"), std::string::npos);
  }
}

TEST(SelectRound, PropertiesOnRandomInstances) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 1 + rng() % 64;
    Dataset syn = random_syn(n, 3, rng);
    Model m = oracle::random_model(3, 5, rng, 1.0);
    auto r1 = select_round(m, syn, Criterion::kChi1);
    auto r2 = select_round(m, syn, Criterion::kChi2);
    auto s1 = as_set(r1.selected_ids), s2 = as_set(r2.selected_ids);
    for (const auto& id : s2) EXPECT_TRUE(s1.count(id)) << id;
    std::set<double> distinct(r2.kl_values.begin(), r2.kl_values.end());
    if (distinct.size() == n) EXPECT_LE(r2.kept, n / 2);
    EXPECT_EQ(r2.kl_values.size(), n);
    std::set<std::string> ids;
    for (const auto& s : syn) ids.insert(s.id);
    for (const auto& id : s1) EXPECT_TRUE(ids.count(id));
    EXPECT_EQ(select_round(m, syn, Criterion::kChi2).selected_ids, r2.selected_ids);
  }
}

TEST(SelectRound, HistogramCountsEveryValue) {
  SelectionRound r;
  r.kl_values = {0.0, 0.24, 0.25, 4.99, 5.0, 80.0};
  auto h = r.kl_histogram();
  EXPECT_EQ(h[0], 2u);
  EXPECT_EQ(h[1], 1u);
  EXPECT_EQ(h[19], 3u);
}

TrainConfig small_cfg() {
  TrainConfig c;
  c.hidden_dim = 16;
  c.epochs = 10;
  c.batch_size = 8;
  c.seed = 3;
  return c;
}

TEST(Pipeline, ZeroIterationsEqualsPlainTraining) {
  Dataset tgt = testing::separable_dataset(2, 3, 5, 48);
  std::mt19937_64 rng(48);
  Dataset syn = random_syn(30, 5, rng);
  auto res = run_pipeline(tgt, syn, 0, Criterion::kChi2, small_cfg());
  ASSERT_EQ(res.models.size(), 1u);
  EXPECT_TRUE(res.rounds.empty());
  EXPECT_EQ(res.final_model(), train(tgt, small_cfg()));
}

TEST(Pipeline, EmptySyntheticSetWarnsAndKeepsBaseline) {
  Dataset tgt = testing::separable_dataset(2, 3, 5, 49);
  Dataset empty("syn", 5, {});
  auto res = run_pipeline(tgt, empty, 2, Criterion::kChi1, small_cfg(), &tgt);
  ASSERT_EQ(res.models.size(), 3u);
  EXPECT_EQ(res.warnings.size(), 2u);
  for (const auto& m : res.models) EXPECT_EQ(m, res.models[0]);
  EXPECT_EQ(res.metrics[2], res.metrics[0]);
}

TEST(Pipeline, RoundsAreReproducibleAndSelectFromSyntheticOnly) {
  Dataset tgt = testing::separable_dataset(2, 3, 5, 50);
  std::mt19937_64 rng(50);
  Dataset syn = random_syn(40, 5, rng);
  auto a = run_pipeline(tgt, syn, 2, Criterion::kChi2, small_cfg());
  auto b = run_pipeline(tgt, syn, 2, Criterion::kChi2, small_cfg());
  ASSERT_EQ(a.rounds.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.rounds[i].selected_ids, b.rounds[i].selected_ids);
    EXPECT_EQ(a.rounds[i].iteration, i);
    for (const auto& id : a.rounds[i].selected_ids) EXPECT_EQ(id.rfind("syn", 0), 0u);
  }
  EXPECT_EQ(a.final_model(), b.final_model());
}

TEST(Pipeline, Chi2NeedsSoftLabels) {
  Dataset tgt = testing::separable_dataset(2, 3, 5, 51);
  std::mt19937_64 rng(51);
  EXPECT_THROW(run_pipeline(tgt, random_syn(4, 5, rng, false), 1, Criterion::kChi2, small_cfg()), DomainError);
}

TEST(CrossValidateBootstrap, ZeroIterationsMatchesBaseline) {
  Dataset tgt = testing::separable_dataset(4, 2, 5, 52);
  std::mt19937_64 rng(52);
  Dataset syn = random_syn(20, 5, rng);
  auto rep = cross_validate_bootstrap(tgt, syn, small_cfg(), 2, {0, 1}, 0, Criterion::kChi2);
  auto base = cross_validate(tgt, small_cfg(), 2, {0, 1});
  ASSERT_EQ(rep.per_iteration.size(), 1u);
  EXPECT_EQ(rep.per_iteration[0], base);
  EXPECT_EQ(rep.oracle.mean, base.mean);
}

TEST(CrossValidateBootstrap, OracleDominatesEveryIteration) {
  Dataset tgt = testing::separable_dataset(4, 2, 5, 53);
  std::mt19937_64 rng(53);
  Dataset syn = random_syn(40, 5, rng);
  auto rep = cross_validate_bootstrap(tgt, syn, small_cfg(), 2, {0, 1}, 3, Criterion::kChi1, 2);
  for (const auto& it : rep.per_iteration) {
    EXPECT_GE(rep.oracle.mean.ua, it.mean.ua);
    EXPECT_GE(rep.oracle.mean.wa, it.mean.wa);
    EXPECT_GE(rep.oracle.mean.f1, it.mean.f1);
  }
}

}  // namespace
}  // namespace bootsel
