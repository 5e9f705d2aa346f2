// Copyright 2026 The ISACL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "isacl/labeler.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "isacl/error.hpp"

namespace isacl {
namespace {

using L = PartitionLabel;

// Sort-and-slice reference for distinct scores: top floor(pN) by score are
// Leak, bottom floor(pN) are NonDisclosure.
std::vector<L> SortAndSlice(const std::vector<double>& scores, double p) {
  const std::size_t n = scores.size();
  const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<L> out(n, L::kDiscard);
  for (std::size_t i = 0; i < k; ++i) {
    out[order[i]] = L::kLeak;
    out[order[n - 1 - i]] = L::kNonDisclosure;
  }
  return out;
}

std::size_t Count(const std::vector<L>& v, L l) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), l));
}

std::vector<double> DistinctScores(std::mt19937_64& gen, std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = (static_cast<double>(i) + 0.5) / n;
  std::shuffle(s.begin(), s.end(), gen);
  return s;
}

TEST(PartitionTest, TenEvenlySpacedScores) {
  std::vector<double> s;
  for (int i = 0; i < 10; ++i) s.push_back(i / 10.0);
  const auto labels = partition(s, {0.2, 0});
  EXPECT_EQ(labels[9], L::kLeak);
  EXPECT_EQ(labels[8], L::kLeak);
  EXPECT_EQ(labels[0], L::kNonDisclosure);
  EXPECT_EQ(labels[1], L::kNonDisclosure);
  EXPECT_EQ(Count(labels, L::kDiscard), 6u);
  const auto sum = summarize_partition(s, labels);
  EXPECT_DOUBLE_EQ(sum.upper_threshold, 0.8);
  EXPECT_DOUBLE_EQ(sum.lower_threshold, 0.1);
}

TEST(PartitionTest, HalfLabelsEverything) {
  std::mt19937_64 gen(5);
  const auto s = DistinctScores(gen, 11);
  const auto labels = partition(s, {0.5, 1});
  EXPECT_EQ(Count(labels, L::kLeak), 5u);
  EXPECT_EQ(Count(labels, L::kNonDisclosure), 5u);
  // Odd N leaves exactly the median unlabeled.
  EXPECT_EQ(Count(labels, L::kDiscard), 1u);
  const auto even = partition(DistinctScores(gen, 10), {0.5, 1});
  EXPECT_EQ(Count(even, L::kDiscard), 0u);
}

TEST(PartitionTest, AllTiedScoresKeepCounts) {
  const std::vector<double> s(10, 0.4);
  const auto labels = partition(s, {0.1, 3});
  EXPECT_EQ(Count(labels, L::kLeak), 1u);
  EXPECT_EQ(Count(labels, L::kNonDisclosure), 1u);
  EXPECT_EQ(Count(labels, L::kDiscard), 8u);
  EXPECT_EQ(partition(s, {0.1, 3}), labels);
}

TEST(PartitionTest, MatchesSortAndSliceOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = DistinctScores(gen, 1 + gen() % 400);
    for (double p : {0.05, 0.1, 0.2, 0.3, 0.5}) {
      ASSERT_EQ(partition(s, {p, static_cast<std::uint64_t>(trial)}),
                SortAndSlice(s, p));
    }
  }
}

TEST(PartitionTest, CountsHoldUnderHeavyTies) {
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> bucket(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(1 + gen() % 300);
    for (auto& x : s) x = bucket(gen) / 3.0;
    for (double p : {0.1, 0.2, 0.3}) {
      const auto labels = partition(s, {p, 7});
      const auto k = static_cast<std::size_t>(std::floor(p * s.size()));
      ASSERT_EQ(Count(labels, L::kLeak), k);
      ASSERT_EQ(Count(labels, L::kNonDisclosure), k);
      // Every Leak score is >= every other score, every ND score <= the rest.
      double min_leak = 2, max_nd = -1, max_rest = -1, min_rest = 2;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (labels[i] == L::kLeak) min_leak = std::min(min_leak, s[i]);
        if (labels[i] == L::kNonDisclosure) max_nd = std::max(max_nd, s[i]);
        if (labels[i] != L::kLeak) max_rest = std::max(max_rest, s[i]);
        if (labels[i] != L::kNonDisclosure) min_rest = std::min(min_rest, s[i]);
      }
      if (k > 0) {
        ASSERT_GE(min_leak, max_rest);
        ASSERT_LE(max_nd, min_rest);
      }
    }
  }
}

TEST(PartitionTest, ComplementSwapsClassesForDistinctScores) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = DistinctScores(gen, 2 + gen() % 200);
    std::vector<double> flipped(s.size());
    std::transform(s.begin(), s.end(), flipped.begin(),
                   [](double x) { return 1.0 - x; });
    const auto a = partition(s, {0.25, 1});
    const auto b = partition(flipped, {0.25, 1});
    for (std::size_t i = 0; i < s.size(); ++i) {
      const L expect = a[i] == L::kLeak            ? L::kNonDisclosure
                       : a[i] == L::kNonDisclosure ? L::kLeak
                                                   : L::kDiscard;
      ASSERT_EQ(b[i], expect);
    }
  }
}

TEST(PartitionTest, NoLabelStrictlyInsideTheBand) {
  std::mt19937_64 gen(14);
  const auto s = DistinctScores(gen, 1000);
  const auto labels = partition(s, {0.2, 0});
  const auto sum = summarize_partition(s, labels);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] > sum.lower_threshold && s[i] < sum.upper_threshold) {
      ASSERT_EQ(labels[i], L::kDiscard);
    }
  }
}

TEST(PartitionTest, RejectsBadInput) {
  const std::vector<double> s = {0.1, 0.2};
  EXPECT_THROW(partition({}, {0.2, 0}), InvalidArgument);
  EXPECT_THROW(partition(s, {0.0, 0}), InvalidArgument);
  EXPECT_THROW(partition(s, {0.51, 0}), InvalidArgument);
  EXPECT_THROW(partition(std::vector<double>{1.5}, {0.2, 0}), InvalidArgument);
}

StateFile States(std::size_t n, std::uint32_t dim) {
  StateFile f;
  f.header.model_id = "m";
  f.header.dim = dim;
  f.header.count = n;
  for (std::size_t i = 0; i < n; ++i) {
    f.records.push_back({"id" + std::to_string(i), StateLabel::kUnlabeled,
                         std::vector<float>(dim, static_cast<float>(i))});
  }
  return f;
}

std::vector<Triplet> Scored(std::size_t n) {
  std::vector<Triplet> ts;
  for (std::size_t i = 0; i < n; ++i) {
    Triplet t;
    t.id = "id" + std::to_string(i);
    t.rouge_l_f = static_cast<double>(i) / n;
    t.aux["events"] = 1.0 - static_cast<double>(i) / n;
    ts.push_back(t);
  }
  return ts;
}

TEST(AssembleTest, CountsAndFeatureDim) {
  const auto a = assemble(States(10, 4), Scored(10), {0.3, 0});
  EXPECT_EQ(a.dataset.size(), 6u);
  EXPECT_EQ(a.dataset.feature_dim, 4u);
  EXPECT_EQ(a.dataset.count_label(1), 3u);
  EXPECT_EQ(a.dataset.count_label(0), 3u);
  // Highest scores (ids 7, 8, 9) are leak; rows keep state order.
  EXPECT_EQ(a.dataset.ids.back(), "id9");
  EXPECT_EQ(a.dataset.labels.back(), 1);
  EXPECT_EQ(a.dataset.ids.front(), "id0");
  EXPECT_EQ(a.dataset.labels.front(), 0);
}

TEST(AssembleTest, AlternateScoreFieldFlipsLabels) {
  const auto a = assemble(States(10, 2), Scored(10), {0.3, 0}, "events");
  EXPECT_EQ(a.dataset.ids.front(), "id0");
  EXPECT_EQ(a.dataset.labels.front(), 1);
  EXPECT_THROW(assemble(States(10, 2), Scored(10), {0.3, 0}, "nope"), DataError);
}

TEST(AssembleTest, ConcatenatesReferences) {
  EmbeddingMap refs;
  for (int i = 0; i < 10; ++i) {
    refs["id" + std::to_string(i)] = std::vector<float>(8, -1.0f);
  }
  const auto a = assemble(States(10, 4), Scored(10), {0.3, 0}, "rouge_l_f", &refs);
  EXPECT_EQ(a.dataset.feature_dim, 12u);
  EXPECT_TRUE(a.dataset.provenance.with_reference);
  EXPECT_EQ(a.dataset.provenance.reference_dim, 8u);
  const auto row = a.dataset.row(0);
  EXPECT_EQ(row[3], 0.0f);
  EXPECT_EQ(row[4], -1.0f);

  refs["id3"] = std::vector<float>(7, 0.0f);
  EXPECT_THROW(assemble(States(10, 4), Scored(10), {0.3, 0}, "rouge_l_f", &refs),
               DimensionError);
  refs.erase("id3");
  EXPECT_THROW(assemble(States(10, 4), Scored(10), {0.3, 0}, "rouge_l_f", &refs),
               DataError);
}

TEST(AssembleTest, StateWithoutTripletIsAnError) {
  auto states = States(5, 2);
  states.records[2].id = "stranger";
  EXPECT_THROW(assemble(states, Scored(5), {0.2, 0}), DataError);
}

LabeledDataset Balanced(std::size_t per_class) {
  LabeledDataset ds;
  ds.feature_dim = 1;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const float v = static_cast<float>(i);
    ds.add("r" + std::to_string(i), std::span(&v, 1),
           static_cast<std::uint8_t>(i % 2));
  }
  return ds;
}

TEST(SplitTest, StratifiedArithmetic) {
  auto [train, test] = split(Balanced(50), 0.8, 1);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(train.count_label(1), 40u);
  EXPECT_EQ(test.size(), 20u);
  EXPECT_EQ(test.count_label(0), 10u);

  auto [small_train, small_test] = split(Balanced(3), 0.8, 1);
  EXPECT_EQ(small_train.size(), 4u);
  EXPECT_EQ(small_train.count_label(1), 2u);
  EXPECT_EQ(small_test.size(), 2u);
  EXPECT_EQ(small_test.count_label(1), 1u);
}

TEST(SplitTest, DeterministicAndDisjoint) {
  const auto ds = Balanced(40);
  auto [a1, b1] = split(ds, 0.7, 9);
  auto [a2, b2] = split(ds, 0.7, 9);
  EXPECT_EQ(a1.ids, a2.ids);
  EXPECT_EQ(b1.ids, b2.ids);
  std::vector<std::string> all = a1.ids;
  all.insert(all.end(), b1.ids.begin(), b1.ids.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
  EXPECT_EQ(all.size(), ds.size());
}

TEST(SplitTest, TinyClassIsAnError) {
  auto ds = Balanced(3);
  const float v = 0;
  ds = LabeledDataset{};
  ds.feature_dim = 1;
  ds.add("a", std::span(&v, 1), 1);
  ds.add("b", std::span(&v, 1), 0);
  ds.add("c", std::span(&v, 1), 0);
  EXPECT_THROW(split(ds, 0.5, 0), DataError);
}

TEST(StateFileConversionTest, RoundTripAndLabelPolarity) {
  auto ds = Balanced(3);
  ds.provenance.model_id = "m";
  const auto f = to_state_file(ds);
  // Leak (training label 1) is stored as byte 0.
  EXPECT_EQ(f.records[1].label, StateLabel::kLeak);
  EXPECT_EQ(f.records[0].label, StateLabel::kNonDisclosure);
  const auto back = from_state_file(f, false, 0);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.ids, ds.ids);

  auto unlabeled = f;
  unlabeled.records[0].label = StateLabel::kUnlabeled;
  EXPECT_THROW(from_state_file(unlabeled, false, 0), DataError);
  EXPECT_THROW(from_state_file(f, true, 5), DimensionError);
}

}  // namespace
}  // namespace isacl
