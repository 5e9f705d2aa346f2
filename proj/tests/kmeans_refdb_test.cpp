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

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "isacl/byte_io.hpp"
#include "isacl/error.hpp"
#include "isacl/kmeans.hpp"
#include "isacl/refdb.hpp"
#include "test_util.hpp"

namespace isacl {
namespace {

std::vector<float> RandomUnitRows(std::mt19937_64& gen, std::size_t n,
                                  std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<float> out(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0;
    std::vector<double> v(dim);
    for (auto& x : v) {
      x = normal(gen);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < dim; ++j) out[i * dim + j] = static_cast<float>(v[j] / norm);
  }
  return out;
}

TEST(KMeansTest, SingleClusterIsTheMean) {
  const std::vector<float> pts = {0, 0, 2, 0, 4, 6};
  const auto r = kmeans(pts, 3, 2, {1, 0, 25});
  EXPECT_NEAR(r.centroids[0], 2.0, 1e-6);
  EXPECT_NEAR(r.centroids[1], 2.0, 1e-6);
  EXPECT_TRUE(r.converged);
}

TEST(KMeansTest, TwoCloudsRecoverTheirCenters) {
  std::mt19937_64 gen(1);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  const std::size_t n = 400, dim = 3;
  std::vector<float> pts(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) pts[i * dim + j] = noise(gen);
    pts[i * dim] += i % 2 == 0 ? 1.0f : -1.0f;
  }
  const auto r = kmeans(pts, n, dim, {2, 7, 25});
  std::vector<double> first = {r.centroids[0], r.centroids[3]};
  std::sort(first.begin(), first.end());
  EXPECT_NEAR(first[0], -1.0, 0.1);
  EXPECT_NEAR(first[1], 1.0, 0.1);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t j = 1; j < dim; ++j) EXPECT_NEAR(r.centroid(c)[j], 0.0, 0.1);
  }
}

TEST(KMeansTest, KEqualsNGivesZeroInertia) {
  std::mt19937_64 gen(2);
  const auto pts = RandomUnitRows(gen, 12, 4);
  const auto r = kmeans(pts, 12, 4, {12, 0, 25});
  EXPECT_NEAR(r.inertia(), 0.0, 1e-9);
  std::set<std::uint32_t> used(r.assignment.begin(), r.assignment.end());
  EXPECT_EQ(used.size(), 12u);
}

TEST(KMeansTest, InertiaNonIncreasingAndCentroidsAreMeans) {
  std::mt19937_64 gen(3);
  const std::size_t n = 2000, dim = 8, k = 20;
  const auto pts = RandomUnitRows(gen, n, dim);
  const auto r = kmeans(pts, n, dim, {k, 5, 100});
  for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
    ASSERT_LE(r.inertia_history[i], r.inertia_history[i - 1] * (1 + 1e-12));
  }
  ASSERT_TRUE(r.converged);
  std::vector<double> sums(k * dim, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++counts[r.assignment[i]];
    for (std::size_t j = 0; j < dim; ++j) sums[r.assignment[i] * dim + j] += pts[i * dim + j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    ASSERT_GT(counts[c], 0u);
    for (std::size_t j = 0; j < dim; ++j) {
      ASSERT_NEAR(r.centroid(c)[j], sums[c * dim + j] / counts[c], 1e-5);
    }
  }
  // Assignment is nearest-centroid.
  for (std::size_t i = 0; i < n; ++i) {
    ASSERT_EQ(nearest_centroid(r.centroids, dim, std::span(pts).subspan(i * dim, dim)),
              r.assignment[i]);
  }
}

TEST(KMeansTest, ErrorsAndDeterminism) {
  const std::vector<float> pts = {0, 1, 2};
  EXPECT_THROW(kmeans(pts, 3, 1, {4, 0, 25}), InvalidArgument);
  EXPECT_THROW(kmeans(pts, 3, 1, {0, 0, 25}), InvalidArgument);
  std::mt19937_64 gen(4);
  const auto many = RandomUnitRows(gen, 300, 5);
  const auto a = kmeans(many, 300, 5, {9, 42, 25});
  const auto b = kmeans(many, 300, 5, {9, 42, 25});
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignment, b.assignment);
}

TEST(KMeansTest, DuplicatePointsStillYieldKCentroids) {
  const std::vector<float> pts(20, 1.0f);
  const auto r = kmeans(pts, 10, 2, {3, 0, 25});
  EXPECT_EQ(r.k, 3u);
  EXPECT_NEAR(r.inertia(), 0.0, 1e-12);
}

std::vector<RefEntry> Entries(std::mt19937_64& gen, std::size_t n, std::size_t dim,
                              std::size_t emb_dim = 0) {
  const auto keys = RandomUnitRows(gen, n, dim);
  const auto embs = emb_dim ? RandomUnitRows(gen, n, emb_dim) : std::vector<float>{};
  std::vector<RefEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    RefEntry e;
    e.id = "e" + std::to_string(i);
    e.input = "input " + std::to_string(i);
    e.reference = "reference " + std::to_string(i);
    e.key.assign(keys.begin() + i * dim, keys.begin() + (i + 1) * dim);
    if (emb_dim) e.embedding.assign(embs.begin() + i * emb_dim, embs.begin() + (i + 1) * emb_dim);
    out.push_back(std::move(e));
  }
  return out;
}

TEST(RefDbTest, StoredKeysRetrieveTheirPairsAtNprobeOne) {
  std::mt19937_64 gen(5);
  auto entries = Entries(gen, 1500, 16, 24);
  const auto db = ReferenceDatabase::build(entries, {0, 1, 3, 25});
  EXPECT_EQ(db.num_clusters(), 39u);  // ceil(sqrt(1500))
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto r = db.search(entries[i].key);
    ASSERT_EQ(r.entry->id, entries[i].id);
    ASSERT_NEAR(r.similarity, 1.0, 1e-5);
    ASSERT_EQ(r.entry->embedding.size(), 24u);
    ASSERT_EQ(r.entry->reference, entries[i].reference);
  }
}

TEST(RefDbTest, FullProbeEqualsBruteForceAndRankingsAgree) {
  std::mt19937_64 gen(6);
  const auto db = ReferenceDatabase::build(Entries(gen, 800, 12), {30, 1, 0, 25});
  const auto queries = RandomUnitRows(gen, 200, 12);
  for (std::size_t q = 0; q < 200; ++q) {
    const auto query = std::span(queries).subspan(q * 12, 12);
    const auto ivf = db.search(query, db.num_clusters());
    const auto brute = db.brute_force(query);
    ASSERT_EQ(ivf.index, brute.index);
    // Independent cosine scan: argmax cosine == argmin L2 on unit vectors.
    double best = -2;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < db.size(); ++i) {
      double dot = 0;
      for (std::size_t j = 0; j < 12; ++j) dot += query[j] * db.entry(i).key[j];
      if (dot > best) {
        best = dot;
        best_i = i;
      }
    }
    ASSERT_EQ(brute.index, best_i);
    ASSERT_GE(ivf.similarity, -1.0);
    ASSERT_LE(ivf.similarity, 1.0);
  }
}

TEST(RefDbTest, DistanceCountIsBoundedByProbedLists) {
  std::mt19937_64 gen(7);
  const auto db = ReferenceDatabase::build(Entries(gen, 3000, 8), {50, 1, 0, 25});
  std::size_t max_list = 0;
  for (const auto& l : db.index().lists) max_list = std::max(max_list, l.size());
  const auto queries = RandomUnitRows(gen, 50, 8);
  for (std::size_t q = 0; q < 50; ++q) {
    const auto r = db.search(std::span(queries).subspan(q * 8, 8));
    ASSERT_LE(r.distance_computations, 50 + max_list);
    ASSERT_EQ(r.distance_computations,
              50 + db.index().lists[db.index().assignment[r.index]].size());
  }
}

TEST(RefDbTest, InvertedListsPartitionTheEntries) {
  std::mt19937_64 gen(8);
  const auto db = ReferenceDatabase::build(Entries(gen, 500, 6), {});
  std::vector<int> seen(db.size(), 0);
  for (std::size_t c = 0; c < db.index().lists.size(); ++c) {
    for (auto i : db.index().lists[c]) {
      ++seen[i];
      ASSERT_EQ(db.index().assignment[i], c);
    }
  }
  for (int s : seen) ASSERT_EQ(s, 1);
}

TEST(RefDbTest, SingleEntryAndMidpoint) {
  std::mt19937_64 gen(9);
  auto one = Entries(gen, 1, 4);
  const auto db1 = ReferenceDatabase::build(one, {});
  const std::vector<float> q = {0.3f, -0.2f, 0.9f, 0.1f};
  EXPECT_EQ(db1.retrieve(q).id, "e0");

  std::vector<RefEntry> two(2);
  two[0] = {"a", "x", "t", {1, 0, 0}, {}};
  two[1] = {"b", "y", "u", {0, 1, 0}, {}};
  const auto db2 = ReferenceDatabase::build(two, {2, 2, 0, 25});
  // Midpoint tilted toward b.
  const std::vector<float> mid = {0.5f, 0.52f, 0.0f};
  EXPECT_EQ(db2.retrieve(mid).id, "b");
  EXPECT_EQ(db2.brute_force(mid).entry->id, "b");
}

TEST(RefDbTest, TopMAndAggregation) {
  std::vector<RefEntry> es(3);
  es[0] = {"a", "x", "t", {1, 0}, {1, 0}};
  es[1] = {"b", "y", "u", {0.8f, 0.6f}, {0, 1}};
  es[2] = {"c", "z", "v", {-1, 0}, {-1, 0}};
  const auto db = ReferenceDatabase::build(es, {1, 1, 0, 25});
  const std::vector<float> q = {1, 0.1f};
  const auto top = db.search_top(q, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].entry->id, "a");
  EXPECT_EQ(top[1].entry->id, "b");
  const auto mean = aggregate_references(top);
  EXPECT_FLOAT_EQ(mean[0], 0.5f);
  EXPECT_FLOAT_EQ(mean[1], 0.5f);
}

TEST(RefDbTest, ValidationErrors) {
  std::mt19937_64 gen(10);
  EXPECT_THROW(ReferenceDatabase::build({}, {}), DataError);
  auto dup = Entries(gen, 3, 4);
  dup[2].id = dup[0].id;
  EXPECT_THROW(ReferenceDatabase::build(dup, {}), DataError);
  auto zero = Entries(gen, 3, 4);
  zero[1].key.assign(4, 0.0f);
  EXPECT_THROW(ReferenceDatabase::build(zero, {}), DataError);
  auto empty_text = Entries(gen, 3, 4);
  empty_text[0].reference.clear();
  EXPECT_THROW(ReferenceDatabase::build(empty_text, {}), DataError);
  auto ragged = Entries(gen, 3, 4);
  ragged[2].key.push_back(0.5f);
  EXPECT_THROW(ReferenceDatabase::build(ragged, {}), DimensionError);
  const auto db = ReferenceDatabase::build(Entries(gen, 3, 4), {});
  EXPECT_THROW(db.search(std::vector<float>{1, 0, 0}), DimensionError);
  EXPECT_THROW(db.search(std::vector<float>{1, 0, 0, 0}, 99), InvalidArgument);
  EXPECT_THROW(ReferenceDatabase().search(std::vector<float>{1}), DataError);
}

TEST(RefDbTest, NormalizesAtIngestion) {
  std::vector<RefEntry> es(1);
  es[0] = {"a", "x", "t", {3, 4}, {}};
  const auto db = ReferenceDatabase::build(es, {});
  EXPECT_NEAR(db.entry(0).key[0], 0.6, 1e-6);
  EXPECT_NEAR(db.entry(0).embedding[1], 0.8, 1e-6);
}

TEST(RefDbTest, StoreLoadRoundTripAndCorruption) {
  testing::TempDir dir;
  std::mt19937_64 gen(11);
  const auto db = ReferenceDatabase::build(Entries(gen, 10000, 16, 8), {});
  const auto start = std::chrono::steady_clock::now();
  db.save(dir / "db.bin");
  const auto back = ReferenceDatabase::load(dir / "db.bin");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 5.0);
  EXPECT_EQ(back.serialize(), db.serialize());
  ASSERT_EQ(back.size(), db.size());
  for (std::size_t i = 0; i < db.size(); i += 997) EXPECT_EQ(back.entry(i), db.entry(i));
  EXPECT_EQ(back.index(), db.index());
  EXPECT_EQ(back.default_nprobe(), db.default_nprobe());

  const auto bytes = db.serialize();
  EXPECT_THROW(ReferenceDatabase::deserialize(bytes.substr(0, bytes.size() / 2)),
               DataError);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x5a;
  EXPECT_THROW(ReferenceDatabase::deserialize(flipped), DataError);
  auto version = bytes;
  version[4] = 7;
  EXPECT_THROW(ReferenceDatabase::deserialize(version), DataError);
}

}  // namespace
}  // namespace isacl
