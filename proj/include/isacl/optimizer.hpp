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

#ifndef ISACL_OPTIMIZER_HPP_
#define ISACL_OPTIMIZER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "isacl/error.hpp"

namespace isacl {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Each step first shrinks the parameters
// by (1 - lr * weight_decay), then applies the bias-corrected Adam update.
template <typename T>
class AdamW {
 public:
  AdamW(std::size_t num_params, const AdamWConfig& config)
      : config_(config), m_(num_params, T(0)), v_(num_params, T(0)) {}

  void step(std::span<T> params, std::span<const T> grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
      throw DimensionError("AdamW: parameter count changed between steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const T decay = static_cast<T>(1.0 - lr * config_.weight_decay);
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T one_minus_b1 = static_cast<T>(1.0 - config_.beta1);
    const T one_minus_b2 = static_cast<T>(1.0 - config_.beta2);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    const T eps = static_cast<T>(config_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const T g = grads[i];
      m_[i] = b1 * m_[i] + one_minus_b1 * g;
      v_[i] = b2 * v_[i] + one_minus_b2 * g * g;
      params[i] *= decay;
      params[i] -= step_size * m_[i] / (std::sqrt(v_[i]) * inv_sqrt_bc2 + eps);
    }
  }

  std::int64_t steps() const { return t_; }

 private:
  AdamWConfig config_;
  std::vector<T> m_;
  std::vector<T> v_;
  std::int64_t t_ = 0;
};

// Learning rate for the given 0-based step under a linear decay from
// base_lr to zero over total_steps, no warmup.
inline double linear_decay_lr(double base_lr, std::int64_t step,
                              std::int64_t total_steps) {
  if (total_steps <= 0) return base_lr;
  const double remaining =
      static_cast<double>(total_steps - step) / static_cast<double>(total_steps);
  return base_lr * std::max(0.0, remaining);
}

}  // namespace isacl

#endif  // ISACL_OPTIMIZER_HPP_
