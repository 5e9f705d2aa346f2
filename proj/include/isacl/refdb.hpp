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

// Reference database: (input, reference, embedding) rows behind an
// inverted-file index.
//
// Each entry carries two unit-norm vectors. `key` is what the index
// clusters and searches (the input-side embedding); `embedding` is the
// reference embedding handed to the judge. When only one embedding is
// available both are the same vector. All vectors are L2-normalized at
// ingestion, so minimal L2 distance and maximal cosine similarity select the
// same entry.

#ifndef ISACL_REFDB_HPP_
#define ISACL_REFDB_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace isacl {

struct RefEntry {
  std::string id;
  std::string input;
  std::string reference;
  std::vector<float> key;
  std::vector<float> embedding;

  friend bool operator==(const RefEntry&, const RefEntry&) = default;
};

struct IvfIndex {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;                  // k x dim
  std::vector<std::uint32_t> assignment;         // entry -> cluster
  std::vector<std::vector<std::uint32_t>> lists;  // cluster -> entries

  std::span<const float> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }

  friend bool operator==(const IvfIndex&, const IvfIndex&) = default;
};

struct RefDbOptions {
  std::size_t k = 0;  // 0 selects ceil(sqrt(N)) clamped to [1, 4096]
  std::size_t nprobe = 1;
  std::uint64_t seed = 0;
  int max_iters = 25;
};

struct QueryResult {
  std::size_t index = 0;
  const RefEntry* entry = nullptr;
  double similarity = 0.0;  // cosine, in [-1, 1]
  double squared_distance = 0.0;
  std::size_t distance_computations = 0;
};

std::size_t default_cluster_count(std::size_t n);

// Returns v / ||v||; throws DataError for zero or non-finite vectors.
std::vector<float> l2_normalized(std::span<const float> v);

class ReferenceDatabase {
 public:
  ReferenceDatabase() = default;

  // Normalizes the vectors, clusters the keys and builds the inverted lists.
  // Throws on an empty entry set, inconsistent dimensions or duplicate ids.
  static ReferenceDatabase build(std::vector<RefEntry> entries,
                                 const RefDbOptions& options = {});

  // Probes the `nprobe` nearest clusters (default: the build-time value) and
  // returns the closest entry among them.
  QueryResult search(std::span<const float> query,
                     std::optional<std::size_t> nprobe = std::nullopt) const;

  // Up to m closest entries among the probed lists, nearest first.
  std::vector<QueryResult> search_top(
      std::span<const float> query, std::size_t m,
      std::optional<std::size_t> nprobe = std::nullopt) const;

  // Exhaustive scan over every entry.
  QueryResult brute_force(std::span<const float> query) const;

  // Reference paired with the nearest stored key.
  const RefEntry& retrieve(std::span<const float> query) const {
    return *search(query).entry;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t key_dim() const { return index_.dim; }
  std::size_t embedding_dim() const { return embedding_dim_; }
  std::size_t num_clusters() const { return index_.k; }
  std::size_t default_nprobe() const { return nprobe_; }
  const IvfIndex& index() const { return index_; }
  const RefEntry& entry(std::size_t i) const { return entries_[i]; }
  std::span<const RefEntry> entries() const { return entries_; }

  std::string serialize() const;
  static ReferenceDatabase deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static ReferenceDatabase load(const std::filesystem::path& path);

  friend bool operator==(const ReferenceDatabase&,
                         const ReferenceDatabase&) = default;

 private:
  std::vector<float> prepare_query(std::span<const float> query) const;
  std::vector<std::size_t> probe_order(std::span<const float> q,
                                       std::size_t nprobe) const;
  std::size_t checked_nprobe(std::optional<std::size_t> nprobe) const;
  QueryResult make_result(std::size_t index, double squared_distance,
                          std::span<const float> q,
                          std::size_t computations) const;
  void rebuild_key_matrix();

  std::vector<RefEntry> entries_;
  std::vector<float> keys_;  // size() x key_dim, mirrors entries_[i].key
  IvfIndex index_;
  std::size_t embedding_dim_ = 0;
  std::size_t nprobe_ = 1;
};

// Element-wise mean of the retrieved reference embeddings (the aggregate fed
// to the judge when more than one reference is retrieved).
std::vector<float> aggregate_references(std::span<const QueryResult> results);

}  // namespace isacl

#endif  // ISACL_REFDB_HPP_
