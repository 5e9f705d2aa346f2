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

#include "isacl/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isacl/error.hpp"
#include "isacl/random.hpp"

namespace isacl {
namespace {

std::span<const float> row_of(std::span<const float> data, std::size_t dim,
                              std::size_t i) {
  return data.subspan(i * dim, dim);
}

// k-means++: first center uniform, then each next center sampled with
// probability proportional to squared distance to the nearest chosen center.
std::vector<std::size_t> seed_plus_plus(std::span<const float> data,
                                        std::size_t n, std::size_t dim,
                                        std::size_t k, Rng& rng) {
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::vector<bool> taken(n, false);
  std::vector<double> mindist(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t i) {
    chosen.push_back(i);
    taken[i] = true;
    auto c = row_of(data, dim, i);
    for (std::size_t j = 0; j < n; ++j) {
      mindist[j] = std::min(mindist[j], squared_l2(row_of(data, dim, j), c));
    }
  };

  take(rng.index(n));
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!taken[j]) total += mindist[j];
    }
    if (total <= 0.0) {
      // Only duplicates of existing centers remain; fill deterministically.
      for (std::size_t j = 0; j < n && chosen.size() < k; ++j) {
        if (!taken[j]) take(j);
      }
      break;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      acc += mindist[j];
      pick = j;
      if (acc > target && mindist[j] > 0.0) break;
    }
    take(pick);
  }
  return chosen;
}

double assign_all(std::span<const float> data, std::size_t n, std::size_t dim,
                  std::span<const float> centroids,
                  std::vector<std::uint32_t>& assignment,
                  std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    assignment[i] = static_cast<std::uint32_t>(
        nearest_centroid(centroids, dim, row_of(data, dim, i), &d));
    dist[i] = d;
    inertia += d;
  }
  return inertia;
}

}  // namespace

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

std::size_t nearest_centroid(std::span<const float> centroids, std::size_t dim,
                             std::span<const float> x, double* distance) {
  const std::size_t k = centroids.size() / dim;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double d = squared_l2(row_of(centroids, dim, c), x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance != nullptr) *distance = best_d;
  return best;
}

KMeansResult kmeans(std::span<const float> data, std::size_t n,
                    std::size_t dim, const KMeansOptions& options) {
  const std::size_t k = options.k;
  if (dim == 0) throw InvalidArgument("kmeans: dim must be >= 1");
  if (data.size() != n * dim) {
    throw DimensionError("kmeans: data size does not equal n * dim");
  }
  if (k == 0) throw InvalidArgument("kmeans: k must be >= 1");
  if (k > n) {
    throw InvalidArgument("kmeans: k = " + std::to_string(k) +
                          " exceeds point count " + std::to_string(n));
  }
  if (options.max_iters < 1) {
    throw InvalidArgument("kmeans: max_iters must be >= 1");
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw DataError("kmeans: non-finite input");
  }

  KMeansResult result;
  result.k = k;
  result.dim = dim;
  result.centroids.resize(k * dim);
  Rng rng(options.seed);
  auto seeds = seed_plus_plus(data, n, dim, k, rng);
  for (std::size_t c = 0; c < k; ++c) {
    auto src = row_of(data, dim, seeds[c]);
    std::copy(src.begin(), src.end(), result.centroids.begin() + c * dim);
  }

  std::vector<std::uint32_t> assignment(n, 0), next(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  bool have_assignment = false;

  for (int iter = 0; iter < options.max_iters; ++iter) {
    result.inertia_history.push_back(
        assign_all(data, n, dim, result.centroids, next, dist));
    if (have_assignment && next == assignment) {
      result.converged = true;
      break;
    }
    assignment.swap(next);
    have_assignment = true;
    ++result.iterations;

    // Centroid update; sums accumulate in point order for reproducibility.
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assignment[i];
      ++counts[c];
      auto x = row_of(data, dim, i);
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += x[j];
    }
    std::vector<bool> reseeded(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      float* mu = result.centroids.data() + c * dim;
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < dim; ++j) {
          mu[j] = static_cast<float>(sums[c * dim + j] /
                                     static_cast<double>(counts[c]));
        }
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!reseeded[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      reseeded[far] = true;
      auto x = row_of(data, dim, far);
      std::copy(x.begin(), x.end(), mu);
    }
  }

  if (!result.converged) {
    result.inertia_history.push_back(
        assign_all(data, n, dim, result.centroids, next, dist));
    assignment.swap(next);
  }
  result.assignment = std::move(assignment);
  return result;
}

}  // namespace isacl
