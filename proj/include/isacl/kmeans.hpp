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

#ifndef ISACL_KMEANS_HPP_
#define ISACL_KMEANS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace isacl {

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  int max_iters = 25;
};

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;         // k x dim, row-major
  std::vector<std::uint32_t> assignment;  // nearest centroid per point
  // Inertia (sum of squared distances to the assigned centroid) after every
  // assignment step, in order.
  std::vector<double> inertia_history;
  int iterations = 0;
  bool converged = false;

  std::span<const float> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
  double inertia() const {
    return inertia_history.empty() ? 0.0 : inertia_history.back();
  }
};

double squared_l2(std::span<const float> a, std::span<const float> b);

// Index of the nearest row of `centroids` (k x dim) to x; ties go to the
// lower index.
std::size_t nearest_centroid(std::span<const float> centroids, std::size_t dim,
                             std::span<const float> x,
                             double* distance = nullptr);

// Lloyd's algorithm from k-means++ seeding over `data` (n x dim, row-major).
// Stops when an assignment step changes nothing or after max_iters updates.
// A cluster left empty by an update is re-seeded at the point farthest from
// its current centroid. The returned assignment is always nearest-centroid
// with respect to the returned centroids. Deterministic for a given seed.
KMeansResult kmeans(std::span<const float> data, std::size_t n,
                    std::size_t dim, const KMeansOptions& options);

}  // namespace isacl

#endif  // ISACL_KMEANS_HPP_
