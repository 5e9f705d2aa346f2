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

// Internal-states judge: a gated MLP with a sigmoid head that scores the
// leakage risk of a prompt from its pooled prefill hidden state, optionally
// concatenated with a retrieved reference embedding.
//
//   logit = w_down . (up(x) * SiLU(gate(x))) + b_down,   p = sigmoid(logit)
//
// where up and gate are affine maps to `hidden_dim` units and
// SiLU(z) = z * sigmoid(z). The decision is 1 (block) iff p >= tau.

#ifndef ISACL_JUDGE_HPP_
#define ISACL_JUDGE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isacl/labeler.hpp"
#include "isacl/random.hpp"

namespace isacl {

// Parameters live in one flat buffer so the optimizer can treat them as a
// single vector. Layout: w_up (h x d) | b_up (h) | w_gate (h x d) |
// b_gate (h) | w_down (h) | b_down (1).
template <typename T>
class GatedMlp {
 public:
  GatedMlp() = default;
  GatedMlp(std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t num_parameters() const { return params_.size(); }

  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }

  std::span<T> w_up() { return block(0, hidden_dim_ * input_dim_); }
  std::span<T> b_up() { return block(off_b_up(), hidden_dim_); }
  std::span<T> w_gate() { return block(off_w_gate(), hidden_dim_ * input_dim_); }
  std::span<T> b_gate() { return block(off_b_gate(), hidden_dim_); }
  std::span<T> w_down() { return block(off_w_down(), hidden_dim_); }
  T& b_down() { return params_[off_b_down()]; }

  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
  void init_uniform(Rng& rng);

  // Throws DimensionError when x.size() != input_dim().
  T logit(std::span<const T> x) const;

  // Mean binary cross-entropy of sigmoid(logit) over the rows, computed in
  // log space. `grad` (num_parameters()) receives the exact gradient.
  // Throws InvalidArgument on an empty batch.
  T loss_and_grad(std::span<const std::span<const T>> rows,
                  std::span<const T> labels, std::span<T> grad) const;

  // Same loss without gradients.
  T loss(std::span<const std::span<const T>> rows,
         std::span<const T> labels) const;

  template <typename U>
  GatedMlp<U> cast() const {
    GatedMlp<U> out(input_dim_, hidden_dim_);
    auto dst = out.parameters();
    for (std::size_t i = 0; i < params_.size(); ++i) {
      dst[i] = static_cast<U>(params_[i]);
    }
    return out;
  }

  friend bool operator==(const GatedMlp&, const GatedMlp&) = default;

 private:
  std::size_t off_b_up() const { return hidden_dim_ * input_dim_; }
  std::size_t off_w_gate() const { return off_b_up() + hidden_dim_; }
  std::size_t off_b_gate() const { return off_w_gate() + hidden_dim_ * input_dim_; }
  std::size_t off_w_down() const { return off_b_gate() + hidden_dim_; }
  std::size_t off_b_down() const { return off_w_down() + hidden_dim_; }
  std::span<T> block(std::size_t off, std::size_t n) {
    return std::span<T>(params_).subspan(off, n);
  }

  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::vector<T> params_;
};

extern template class GatedMlp<float>;
extern template class GatedMlp<double>;

double sigmoid(double z);

struct JudgeModel {
  GatedMlp<float> net;
  float tau = 0.5f;
  DatasetProvenance provenance;

  std::size_t input_dim() const { return net.input_dim(); }
  std::size_t state_dim() const {
    return net.input_dim() - provenance.reference_dim;
  }

  friend bool operator==(const JudgeModel&, const JudgeModel&) = default;
};

struct Prediction {
  double logit = 0.0;
  double probability = 0.0;
  int decision = 0;  // 1 = leak risk (block), 0 = allow
  double latency_seconds = 0.0;
};

inline int decide(double probability, double tau) {
  return probability >= tau ? 1 : 0;
}

// Scores an already-concatenated feature row of length input_dim().
Prediction predict_features(const JudgeModel& model,
                            std::span<const float> features);

// Builds [state | reference] and scores it. Reference-augmented models
// require `reference`; state-only models ignore it.
Prediction predict(const JudgeModel& model, std::span<const float> state,
                   std::optional<std::span<const float>> reference = std::nullopt);

struct TrainConfig {
  int epochs = 250;
  std::size_t batch_size = 4;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::size_t hidden_dim = 256;
  std::uint64_t seed = 0;
  float tau = 0.5f;
};

struct TrainLog {
  std::vector<double> epoch_loss;  // sample-weighted mean batch loss
  std::int64_t steps = 0;
};

// AdamW (beta1 0.9, beta2 0.999, eps 1e-8) with the learning rate decayed
// linearly to zero over all steps. Rows are reshuffled every epoch.
// Throws DataError for an empty or single-class dataset and when the loss
// becomes non-finite.
JudgeModel train(const LabeledDataset& dataset, const TrainConfig& config,
                 TrainLog* log = nullptr);

inline constexpr char kModelMagic[4] = {'I', 'S', 'J', 'M'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string serialize_model(const JudgeModel& model);
JudgeModel deserialize_model(std::string_view bytes);
void save_model(const JudgeModel& model, const std::filesystem::path& path);
JudgeModel load_model(const std::filesystem::path& path);

}  // namespace isacl

#endif  // ISACL_JUDGE_HPP_
