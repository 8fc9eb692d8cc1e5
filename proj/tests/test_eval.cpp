// tests/test_eval.cpp

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

#include <random>
#include <set>

#include "bootsel/eval.hpp"
#include "bootsel/parallel.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bootsel {
namespace {

Dataset speaker_counts(const std::vector<std::pair<std::string, int>>& counts) {
  std::vector<LabeledSample> v;
  int n = 0;
  for (const auto& [spk, c] : counts)
    for (int i = 0; i < c; ++i, ++n)
      v.push_back(testing::make_sample("u" + std::to_string(n), emotion_from_index(n % 4), testing::const_row(2, 0), spk));
  return Dataset("d", 2, v);
}

TEST(Partition, GreedyByCount) {
  Dataset ds = speaker_counts({{"A", 4}, {"B", 3}, {"C", 2}, {"D", 1}});
  FoldPlan plan = partition_speakers(ds, 2);
  EXPECT_EQ(plan.speakers[0], (std::vector<std::string>{"A", "D"}));
  EXPECT_EQ(plan.speakers[1], (std::vector<std::string>{"B", "C"}));
  EXPECT_EQ(plan.test_indices[0].size(), 5u);
  EXPECT_EQ(plan.test_indices[1].size(), 5u);
}

TEST(Partition, EqualSpeakersOnePerFold) {
  Dataset ds = speaker_counts({{"w", 5}, {"x", 5}, {"y", 5}, {"z", 5}});
  FoldPlan plan = partition_speakers(ds, 4);
  std::set<std::string> seen;
  for (const auto& f : plan.speakers) {
    ASSERT_EQ(f.size(), 1u);
    seen.insert(f[0]);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(Partition, TooFewSpeakers) {
  Dataset ds = speaker_counts({{"a", 3}, {"b", 3}});
  EXPECT_THROW(partition_speakers(ds, 3), DomainError);
  EXPECT_THROW(partition_speakers(ds, 0), DomainError);
}

TEST(Partition, RandomDatasetsAreSpeakerDisjointAndCover) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n_spk = 2 + rng() % 12;
    std::vector<std::pair<std::string, int>> counts;
    for (std::size_t s = 0; s < n_spk; ++s) counts.push_back({"s" + std::to_string(rng() % 50), 1 + int(rng() % 9)});
    Dataset ds = speaker_counts(counts);
    std::set<std::string> distinct;
    for (const auto& s : ds) distinct.insert(s.speaker);
    if (distinct.size() < 2) continue;
    std::size_t k = 2 + rng() % std::min<std::size_t>(distinct.size() - 1, 5);
    FoldPlan plan = partition_speakers(ds, k);
    std::vector<int> hits(ds.size(), 0);
    for (std::size_t f = 0; f < k; ++f) {
      std::set<std::string> test_spk;
      for (auto i : plan.test_indices[f]) {
        ++hits[i];
        test_spk.insert(ds[i].speaker);
      }
      for (auto i : plan.train_indices(f)) ASSERT_FALSE(test_spk.count(ds[i].speaker));
      EXPECT_EQ(plan.test_indices[f].size() + plan.train_indices(f).size(), ds.size());
    }
    for (int h : hits) ASSERT_EQ(h, 1);
  }
}

std::vector<Emotion> to_emotions(const std::vector<int>& v) {
  std::vector<Emotion> out;
  for (int x : v) out.push_back(emotion_from_index(x));
  return out;
}

TEST(Metrics, AllCorrect) {
  auto l = to_emotions({0, 1, 2, 3, 1});
  auto m = compute_metrics(l, l);
  EXPECT_EQ(m.ua, 1.0);
  EXPECT_EQ(m.wa, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(Metrics, WorkedExample) {
  auto m = compute_metrics(to_emotions({0, 0, 1, 1}), to_emotions({0, 1, 1, 1}));
  EXPECT_NEAR(m.wa, 0.75, 1e-15);
  EXPECT_NEAR(m.ua, 0.75, 1e-15);
  EXPECT_NEAR(m.f1, (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
  EXPECT_EQ(m.confusion[0][1], 1u);
  EXPECT_EQ(m.confusion[1][1], 2u);
}

TEST(Metrics, SinglePresentClass) {
  auto l = to_emotions({2, 2, 2});
  auto m = compute_metrics(l, l);
  EXPECT_EQ(m.ua, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(Metrics, Errors) {
  auto l = to_emotions({0, 1});
  EXPECT_THROW(compute_metrics(l, to_emotions({0})), DomainError);
  EXPECT_THROW(compute_metrics(std::vector<Emotion>{}, std::vector<Emotion>{}), DomainError);
}

TEST(Metrics, AgreeWithBruteForce) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + rng() % 40;
    int classes = 1 + int(rng() % 4);
    std::vector<int> l(n), p(n);
    for (auto& x : l) x = int(rng() % classes);
    for (auto& x : p) x = int(rng() % 4);
    auto want = oracle::metrics(l, p);
    auto got = compute_metrics(to_emotions(l), to_emotions(p));
    ASSERT_NEAR(got.ua, want.ua, 1e-12);
    ASSERT_NEAR(got.wa, want.wa, 1e-12);
    ASSERT_NEAR(got.f1, want.f1, 1e-12);
  }
}

TEST(Metrics, BalancedLabelsGiveUaEqualWa) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> present;
    for (int c = 0; c < 4; ++c)
      if (rng() % 2) present.push_back(c);
    if (present.empty()) present.push_back(int(rng() % 4));
    std::size_t per = 1 + rng() % 6;
    std::vector<int> l, p;
    for (int c : present)
      for (std::size_t i = 0; i < per; ++i) {
        l.push_back(c);
        p.push_back(int(rng() % 4));
      }
    auto m = compute_metrics(to_emotions(l), to_emotions(p));
    EXPECT_NEAR(m.ua, m.wa, 1e-12);
  }
}

TEST(Summarize, MeanOverFoldsThenSeedsAndPopulationStd) {
  std::vector<RunMetrics> runs;
  auto mk = [](double v) {
    Metrics m;
    m.ua = m.wa = m.f1 = v;
    return m;
  };
  // seed 0: folds 0.2, 0.4 -> 0.3; seed 1: folds 0.6, 1.0 -> 0.8.
  runs.push_back({0, 0, mk(0.2)});
  runs.push_back({1, 0, mk(0.4)});
  runs.push_back({0, 1, mk(0.6)});
  runs.push_back({1, 1, mk(1.0)});
  auto r = summarize(runs);
  EXPECT_NEAR(r.mean.f1, 0.55, 1e-15);
  // population std of {0.2, 0.4, 0.6, 1.0}, mean 0.55.
  EXPECT_NEAR(r.stddev.f1, std::sqrt((0.1225 + 0.0225 + 0.0025 + 0.2025) / 4), 1e-15);
}

TEST(Summarize, MeanLiesWithinRunRange) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RunMetrics> runs;
    std::size_t seeds = 1 + rng() % 3, folds = 2 + rng() % 3;
    double lo = 1, hi = 0;
    for (std::size_t s = 0; s < seeds; ++s)
      for (std::size_t f = 0; f < folds; ++f) {
        Metrics m;
        m.ua = u(rng);
        m.wa = u(rng);
        m.f1 = u(rng);
        lo = std::min(lo, m.f1);
        hi = std::max(hi, m.f1);
        runs.push_back({f, s, m});
      }
    auto r = summarize(runs);
    EXPECT_GE(r.mean.f1, lo - 1e-12);
    EXPECT_LE(r.mean.f1, hi + 1e-12);
  }
}

TEST(Runs, SeedDerivationIsStable) {
  auto runs = make_runs(3, {0, 1, 2}, 7);
  ASSERT_EQ(runs.size(), 9u);
  EXPECT_EQ(runs[4].fold, 1u);
  EXPECT_EQ(runs[4].seed, 1u);
  EXPECT_EQ(runs[4].train_seed, derive_seed(7, 1, 1));
  std::set<std::uint64_t> distinct;
  for (const auto& r : runs) distinct.insert(r.train_seed);
  EXPECT_EQ(distinct.size(), 9u);
}

TrainConfig small_cfg() {
  TrainConfig c;
  c.hidden_dim = 16;
  c.epochs = 30;
  c.batch_size = 8;
  return c;
}

TEST(CrossValidate, RunCountAndDeterminism) {
  Dataset ds = testing::separable_dataset(4, 2, 5, 31);
  auto a = cross_validate(ds, small_cfg(), 2, {0, 1, 2});
  auto b = cross_validate(ds, small_cfg(), 2, {0, 1, 2});
  EXPECT_EQ(a.runs.size(), 6u);
  EXPECT_EQ(a, b);
}

TEST(CrossValidate, ParallelMatchesSerial) {
  Dataset ds = testing::separable_dataset(4, 2, 5, 32);
  CvOptions par;
  par.jobs = 3;
  EXPECT_EQ(cross_validate(ds, small_cfg(), 4, {5, 6}), cross_validate(ds, small_cfg(), 4, {5, 6}, par));
}

TEST(CrossValidate, SeparableSpeakersGiveFullAccuracy) {
  Dataset ds = testing::separable_dataset(4, 3, 6, 33);
  auto rep = cross_validate(ds, small_cfg(), 4, {0});
  EXPECT_EQ(rep.mean.wa, 1.0);
}

TEST(CrossValidate, FailuresNameTheRun) {
  Dataset ds = testing::separable_dataset(2, 2, 5, 34);
  CvOptions opts;
  opts.augment = [](const Dataset&, std::uint64_t) -> Dataset { throw DomainError("boom"); };
  try {
    cross_validate(ds, small_cfg(), 2, {4}, opts);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(std::string(e.what()), "fold 0, seed 4: boom");
  }
}

TEST(ParallelMap, OrderAndLowestIndexError) {
  auto out = parallel_map(20, 4, [](std::size_t i) { return int(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], int(i * i));
  try {
    parallel_map(10, 3, [](std::size_t i) -> int {
      if (i == 3 || i == 7) throw DomainError("fail " + std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "fail 3");
  }
}

}  // namespace
}  // namespace bootsel
