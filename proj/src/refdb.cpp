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

#include "isacl/refdb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>
#include <utility>

#include "isacl/byte_io.hpp"
#include "isacl/error.hpp"
#include "isacl/kmeans.hpp"

namespace isacl {
namespace {

constexpr char kDbMagic[4] = {'R', 'F', 'D', 'B'};
constexpr std::uint32_t kDbVersion = 1;
constexpr std::size_t kMaxClusters = 4096;

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

void put_string(ByteWriter& w, const std::string& s) {
  w.put_u32(static_cast<std::uint32_t>(s.size()));
  w.put_bytes(s);
}

std::string get_string(ByteReader& r, std::string_view what) {
  auto len = r.get_u32(what);
  return std::string(r.get_bytes(len, what));
}

}  // namespace

std::size_t default_cluster_count(std::size_t n) {
  auto k = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(n))));
  return std::clamp<std::size_t>(k, 1, kMaxClusters);
}

std::vector<float> l2_normalized(std::span<const float> v) {
  double norm2 = 0.0;
  for (float x : v) {
    if (!std::isfinite(x)) throw DataError("non-finite embedding value");
    norm2 += static_cast<double>(x) * x;
  }
  if (norm2 <= 0.0) throw DataError("zero embedding cannot be normalized");
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(v[i] * inv);
  }
  return out;
}

ReferenceDatabase ReferenceDatabase::build(std::vector<RefEntry> entries,
                                           const RefDbOptions& options) {
  if (entries.empty()) throw DataError("reference database needs entries");
  const std::size_t dim = entries.front().key.size();
  if (dim == 0) throw DimensionError("empty key embedding");
  std::size_t emb_dim = entries.front().embedding.empty()
                            ? dim
                            : entries.front().embedding.size();
  std::unordered_set<std::string_view> ids;
  for (auto& e : entries) {
    if (!ids.insert(e.id).second) {
      throw DataError("duplicate reference entry id '" + e.id + "'");
    }
    if (e.input.empty() || e.reference.empty()) {
      throw DataError("entry '" + e.id + "' has empty input or reference text");
    }
    if (e.key.size() != dim) {
      throw DimensionError("entry '" + e.id + "' key dim " +
                           std::to_string(e.key.size()) + " != " +
                           std::to_string(dim));
    }
    if (e.embedding.empty()) e.embedding = e.key;
    if (e.embedding.size() != emb_dim) {
      throw DimensionError("entry '" + e.id + "' embedding dim " +
                           std::to_string(e.embedding.size()) + " != " +
                           std::to_string(emb_dim));
    }
    try {
      e.key = l2_normalized(e.key);
      e.embedding = l2_normalized(e.embedding);
    } catch (const DataError& err) {
      throw DataError("entry '" + e.id + "': " + err.what());
    }
  }

  const std::size_t n = entries.size();
  std::size_t k = options.k == 0 ? default_cluster_count(n) : options.k;
  if (k > n) {
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds " +
                          std::to_string(n) + " entries");
  }
  if (options.nprobe < 1 || options.nprobe > k) {
    throw InvalidArgument("nprobe must lie in [1, k]");
  }

  ReferenceDatabase db;
  db.entries_ = std::move(entries);
  db.embedding_dim_ = emb_dim;
  db.nprobe_ = options.nprobe;
  db.rebuild_key_matrix();

  auto km = kmeans(db.keys_, n, dim,
                   {.k = k, .seed = options.seed, .max_iters = options.max_iters});
  db.index_.k = k;
  db.index_.dim = dim;
  db.index_.centroids = std::move(km.centroids);
  db.index_.assignment = std::move(km.assignment);
  db.index_.lists.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) {
    db.index_.lists[db.index_.assignment[i]].push_back(
        static_cast<std::uint32_t>(i));
  }
  return db;
}

void ReferenceDatabase::rebuild_key_matrix() {
  keys_.clear();
  keys_.reserve(entries_.size() * (entries_.empty() ? 0 : entries_[0].key.size()));
  for (const auto& e : entries_) keys_.insert(keys_.end(), e.key.begin(), e.key.end());
}

std::vector<float> ReferenceDatabase::prepare_query(
    std::span<const float> query) const {
  if (entries_.empty()) throw DataError("reference database is empty");
  if (query.size() != index_.dim) {
    throw DimensionError("query dim " + std::to_string(query.size()) +
                         " != database key dim " + std::to_string(index_.dim));
  }
  return l2_normalized(query);
}

std::size_t ReferenceDatabase::checked_nprobe(
    std::optional<std::size_t> nprobe) const {
  std::size_t np = nprobe.value_or(nprobe_);
  if (np < 1 || np > index_.k) {
    throw InvalidArgument("nprobe " + std::to_string(np) +
                          " outside [1, " + std::to_string(index_.k) + "]");
  }
  return np;
}

std::vector<std::size_t> ReferenceDatabase::probe_order(
    std::span<const float> q, std::size_t nprobe) const {
  std::vector<std::pair<double, std::size_t>> d(index_.k);
  for (std::size_t c = 0; c < index_.k; ++c) {
    d[c] = {squared_l2(index_.centroid(c), q), c};
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(nprobe),
                    d.end());
  std::vector<std::size_t> out(nprobe);
  for (std::size_t i = 0; i < nprobe; ++i) out[i] = d[i].second;
  return out;
}

QueryResult ReferenceDatabase::make_result(std::size_t index,
                                           double squared_distance,
                                           std::span<const float> q,
                                           std::size_t computations) const {
  QueryResult r;
  r.index = index;
  r.entry = &entries_[index];
  r.squared_distance = squared_distance;
  r.similarity = std::clamp(dot(q, entries_[index].key), -1.0, 1.0);
  r.distance_computations = computations;
  return r;
}

QueryResult ReferenceDatabase::search(std::span<const float> query,
                                      std::optional<std::size_t> nprobe) const {
  auto top = search_top(query, 1, nprobe);
  return top.front();
}

std::vector<QueryResult> ReferenceDatabase::search_top(
    std::span<const float> query, std::size_t m,
    std::optional<std::size_t> nprobe) const {
  auto q = prepare_query(query);
  const std::size_t np = checked_nprobe(nprobe);
  if (m == 0) throw InvalidArgument("search_top: m must be >= 1");

  std::size_t computations = index_.k;
  std::vector<std::pair<double, std::size_t>> scanned;
  for (std::size_t c : probe_order(q, np)) {
    for (std::uint32_t id : index_.lists[c]) {
      scanned.emplace_back(
          squared_l2({keys_.data() + std::size_t{id} * index_.dim, index_.dim}, q),
          id);
      ++computations;
    }
  }
  if (scanned.empty()) {
    // Every probed list was empty; cannot happen after k-means assignment but
    // guard against hand-built indexes.
    throw DataError("probed clusters contain no entries");
  }
  const std::size_t keep = std::min(m, scanned.size());
  std::partial_sort(scanned.begin(),
                    scanned.begin() + static_cast<std::ptrdiff_t>(keep),
                    scanned.end());
  std::vector<QueryResult> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    out.push_back(make_result(scanned[i].second, scanned[i].first, q, computations));
  }
  return out;
}

QueryResult ReferenceDatabase::brute_force(std::span<const float> query) const {
  auto q = prepare_query(query);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    double d = squared_l2({keys_.data() + i * index_.dim, index_.dim}, q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return make_result(best, best_d, q, entries_.size());
}

std::string ReferenceDatabase::serialize() const {
  ByteWriter w;
  w.put_bytes(std::string_view(kDbMagic, 4));
  w.put_u32(kDbVersion);
  w.put_u32(static_cast<std::uint32_t>(index_.dim));
  w.put_u32(static_cast<std::uint32_t>(embedding_dim_));
  w.put_u64(entries_.size());
  w.put_u32(static_cast<std::uint32_t>(index_.k));
  w.put_u32(static_cast<std::uint32_t>(nprobe_));
  for (const auto& e : entries_) {
    put_string(w, e.id);
    put_string(w, e.input);
    put_string(w, e.reference);
    w.put_f32s(e.key);
    w.put_f32s(e.embedding);
  }
  w.put_f32s(index_.centroids);
  for (std::uint32_t a : index_.assignment) w.put_u32(a);
  for (const auto& list : index_.lists) {
    w.put_u32(static_cast<std::uint32_t>(list.size()));
    for (std::uint32_t id : list) w.put_u32(id);
  }
  w.put_u64(fnv1a64(w.bytes()));
  return w.take();
}

ReferenceDatabase ReferenceDatabase::deserialize(std::string_view bytes) {
  if (bytes.size() < 12) throw DataError("reference database file truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  ByteReader tail(bytes.substr(bytes.size() - 8));
  ByteReader in(body);
  if (in.get_bytes(4, "magic") != std::string_view(kDbMagic, 4)) {
    throw DataError("bad magic: not a reference database file");
  }
  auto version = in.get_u32("version");
  if (version != kDbVersion) {
    throw DataError("unsupported reference database version " +
                    std::to_string(version));
  }
  if (tail.get_u64("checksum") != fnv1a64(body)) {
    throw DataError("reference database checksum mismatch (corrupt file)");
  }

  ReferenceDatabase db;
  const std::size_t dim = in.get_u32("key dim");
  db.embedding_dim_ = in.get_u32("embedding dim");
  const std::size_t n = in.get_u64("entry count");
  const std::size_t k = in.get_u32("cluster count");
  db.nprobe_ = in.get_u32("nprobe");
  if (dim == 0 || db.embedding_dim_ == 0 || n == 0 || k == 0 || k > n ||
      db.nprobe_ < 1 || db.nprobe_ > k) {
    throw DataError("reference database header is inconsistent");
  }
  db.entries_.reserve(std::min<std::size_t>(n, in.remaining()));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string ctx = "entry " + std::to_string(i);
    RefEntry e;
    e.id = get_string(in, ctx);
    e.input = get_string(in, ctx);
    e.reference = get_string(in, ctx);
    e.key.resize(dim);
    in.get_f32s(e.key, ctx);
    e.embedding.resize(db.embedding_dim_);
    in.get_f32s(e.embedding, ctx);
    db.entries_.push_back(std::move(e));
  }
  db.index_.k = k;
  db.index_.dim = dim;
  db.index_.centroids.resize(k * dim);
  in.get_f32s(db.index_.centroids, "centroids");
  db.index_.assignment.resize(n);
  for (auto& a : db.index_.assignment) {
    a = in.get_u32("assignment");
    if (a >= k) throw DataError("assignment refers to a missing cluster");
  }
  db.index_.lists.resize(k);
  std::vector<bool> seen(n, false);
  for (std::size_t c = 0; c < k; ++c) {
    auto len = in.get_u32("inverted list");
    auto& list = db.index_.lists[c];
    list.reserve(std::min<std::size_t>(len, n));
    for (std::uint32_t j = 0; j < len; ++j) {
      auto id = in.get_u32("inverted list");
      if (id >= n || seen[id] || db.index_.assignment[id] != c) {
        throw DataError("inverted lists do not partition the entries");
      }
      seen[id] = true;
      list.push_back(id);
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw DataError("inverted lists do not cover every entry");
  }
  if (!in.at_end()) throw DataError("trailing bytes in reference database");
  db.rebuild_key_matrix();
  return db;
}

void ReferenceDatabase::save(const std::filesystem::path& path) const {
  write_file_bytes(path, serialize());
}

ReferenceDatabase ReferenceDatabase::load(const std::filesystem::path& path) {
  try {
    return deserialize(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<float> aggregate_references(std::span<const QueryResult> results) {
  if (results.empty()) throw InvalidArgument("no references to aggregate");
  const std::size_t dim = results.front().entry->embedding.size();
  std::vector<double> acc(dim, 0.0);
  for (const auto& r : results) {
    for (std::size_t j = 0; j < dim; ++j) acc[j] += r.entry->embedding[j];
  }
  std::vector<float> out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    out[j] = static_cast<float>(acc[j] / static_cast<double>(results.size()));
  }
  return out;
}

}  // namespace isacl
