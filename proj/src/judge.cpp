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

#include "isacl/judge.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "isacl/byte_io.hpp"
#include "isacl/error.hpp"
#include "isacl/optimizer.hpp"

namespace isacl {
namespace {

template <typename T>
T stable_sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// log(1 + exp(z)) without overflow.
template <typename T>
T softplus(T z) {
  return std::max(z, T(0)) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

double sigmoid(double z) { return stable_sigmoid(z); }

template <typename T>
GatedMlp<T>::GatedMlp(std::size_t input_dim, std::size_t hidden_dim)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (input_dim == 0 || hidden_dim == 0) {
    throw InvalidArgument("GatedMlp: input_dim and hidden_dim must be >= 1");
  }
  params_.assign(2 * hidden_dim * input_dim + 3 * hidden_dim + 1, T(0));
}

template <typename T>
void GatedMlp<T>::init_uniform(Rng& rng) {
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_dim_));
  const double hid_bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim_));
  auto fill = [&](std::span<T> s, double bound) {
    for (T& v : s) v = static_cast<T>(rng.uniform(-bound, bound));
  };
  fill(w_up(), in_bound);
  fill(b_up(), in_bound);
  fill(w_gate(), in_bound);
  fill(b_gate(), in_bound);
  fill(w_down(), hid_bound);
  b_down() = static_cast<T>(rng.uniform(-hid_bound, hid_bound));
}

template <typename T>
T GatedMlp<T>::logit(std::span<const T> x) const {
  if (x.size() != input_dim_) {
    throw DimensionError("judge input has " + std::to_string(x.size()) +
                         " features, model expects " +
                         std::to_string(input_dim_));
  }
  const T* w_up = params_.data();
  const T* b_up = w_up + off_b_up();
  const T* w_gate = params_.data() + off_w_gate();
  const T* b_gate = params_.data() + off_b_gate();
  const T* w_down = params_.data() + off_w_down();
  T z = params_[off_b_down()];
  for (std::size_t j = 0; j < hidden_dim_; ++j) {
    const T* ru = w_up + j * input_dim_;
    const T* rg = w_gate + j * input_dim_;
    T u = b_up[j];
    T g = b_gate[j];
    for (std::size_t i = 0; i < input_dim_; ++i) {
      u += ru[i] * x[i];
      g += rg[i] * x[i];
    }
    z += w_down[j] * u * (g * stable_sigmoid(g));
  }
  return z;
}

template <typename T>
T GatedMlp<T>::loss(std::span<const std::span<const T>> rows,
                    std::span<const T> labels) const {
  if (rows.empty()) throw InvalidArgument("loss: empty batch");
  T total = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const T z = logit(rows[r]);
    total += softplus(z) - labels[r] * z;
  }
  return total / static_cast<T>(rows.size());
}

template <typename T>
T GatedMlp<T>::loss_and_grad(std::span<const std::span<const T>> rows,
                             std::span<const T> labels,
                             std::span<T> grad) const {
  if (rows.empty()) throw InvalidArgument("loss_and_grad: empty batch");
  if (labels.size() != rows.size()) {
    throw DimensionError("loss_and_grad: label count differs from row count");
  }
  if (grad.size() != params_.size()) {
    throw DimensionError("loss_and_grad: gradient buffer has wrong size");
  }
  const std::size_t d = input_dim_;
  const std::size_t h = hidden_dim_;
  const T* w_up = params_.data();
  const T* b_up = w_up + off_b_up();
  const T* w_gate = params_.data() + off_w_gate();
  const T* b_gate = params_.data() + off_b_gate();
  const T* w_down = params_.data() + off_w_down();
  T* gw_up = grad.data();
  T* gb_up = gw_up + off_b_up();
  T* gw_gate = grad.data() + off_w_gate();
  T* gb_gate = grad.data() + off_b_gate();
  T* gw_down = grad.data() + off_w_down();
  T& gb_down = grad[off_b_down()];
  std::fill(grad.begin(), grad.end(), T(0));

  std::vector<T> u(h), g(h), s(h);
  const T inv_batch = T(1) / static_cast<T>(rows.size());
  T total = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto x = rows[r];
    if (x.size() != d) {
      throw DimensionError("loss_and_grad: row " + std::to_string(r) +
                           " has wrong feature count");
    }
    T z = params_[off_b_down()];
    for (std::size_t j = 0; j < h; ++j) {
      const T* ru = w_up + j * d;
      const T* rg = w_gate + j * d;
      T uj = b_up[j];
      T gj = b_gate[j];
      for (std::size_t i = 0; i < d; ++i) {
        uj += ru[i] * x[i];
        gj += rg[i] * x[i];
      }
      u[j] = uj;
      g[j] = gj;
      s[j] = stable_sigmoid(gj);
      z += w_down[j] * uj * (gj * s[j]);
    }
    const T y = labels[r];
    total += softplus(z) - y * z;

    const T dz = (stable_sigmoid(z) - y) * inv_batch;
    gb_down += dz;
    for (std::size_t j = 0; j < h; ++j) {
      const T act = g[j] * s[j];  // SiLU(g)
      gw_down[j] += dz * u[j] * act;
      const T dm = dz * w_down[j];
      const T du = dm * act;
      // d SiLU / dg = s + g * s * (1 - s)
      const T dg = dm * u[j] * (s[j] + g[j] * s[j] * (T(1) - s[j]));
      gb_up[j] += du;
      gb_gate[j] += dg;
      T* row_u = gw_up + j * d;
      T* row_g = gw_gate + j * d;
      for (std::size_t i = 0; i < d; ++i) {
        row_u[i] += du * x[i];
        row_g[i] += dg * x[i];
      }
    }
  }
  return total * inv_batch;
}

template class GatedMlp<float>;
template class GatedMlp<double>;

Prediction predict_features(const JudgeModel& model,
                            std::span<const float> features) {
  const auto start = std::chrono::steady_clock::now();
  Prediction p;
  p.logit = static_cast<double>(model.net.logit(features));
  p.probability = sigmoid(p.logit);
  p.decision = decide(p.probability, static_cast<double>(model.tau));
  p.latency_seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return p;
}

Prediction predict(const JudgeModel& model, std::span<const float> state,
                   std::optional<std::span<const float>> reference) {
  if (!model.provenance.with_reference) {
    return predict_features(model, state);
  }
  if (!reference) {
    throw InvalidArgument(
        "model was trained with reference embeddings; a reference is required");
  }
  if (state.size() + reference->size() != model.input_dim()) {
    throw DimensionError("state (" + std::to_string(state.size()) +
                         ") + reference (" + std::to_string(reference->size()) +
                         ") features != model input dim " +
                         std::to_string(model.input_dim()));
  }
  const auto start = std::chrono::steady_clock::now();
  std::vector<float> features;
  features.reserve(model.input_dim());
  features.insert(features.end(), state.begin(), state.end());
  features.insert(features.end(), reference->begin(), reference->end());
  Prediction p = predict_features(model, features);
  p.latency_seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return p;
}

JudgeModel train(const LabeledDataset& dataset, const TrainConfig& config,
                 TrainLog* log) {
  if (config.epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (config.batch_size < 1) {
    throw InvalidArgument("train: batch_size must be >= 1");
  }
  if (!(config.learning_rate >= 0.0)) {
    throw InvalidArgument("train: learning_rate must be >= 0");
  }
  if (!(config.tau > 0.0f && config.tau < 1.0f)) {
    throw InvalidArgument("train: tau must lie in (0, 1)");
  }
  if (dataset.empty()) throw DataError("train: empty dataset");
  const std::size_t positives = dataset.count_label(1);
  if (positives == 0 || positives == dataset.size()) {
    throw DataError("train: dataset contains a single class");
  }

  JudgeModel model;
  model.provenance = dataset.provenance;
  model.tau = config.tau;
  model.net = GatedMlp<float>(dataset.feature_dim, config.hidden_dim);
  Rng rng(config.seed);
  model.net.init_uniform(rng);

  AdamW<float> opt(model.net.num_parameters(),
                   {.weight_decay = config.weight_decay});
  std::vector<float> grad(model.net.num_parameters());
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t n = dataset.size();
  const std::size_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const auto total_steps =
      static_cast<std::int64_t>(batches_per_epoch) * config.epochs;
  std::int64_t step = 0;
  std::vector<std::span<const float>> rows;
  std::vector<float> labels;
  if (log != nullptr) log->epoch_loss.clear();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      rows.clear();
      labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        rows.push_back(dataset.row(order[k]));
        labels.push_back(static_cast<float>(dataset.labels[order[k]]));
      }
      const float loss = model.net.loss_and_grad(rows, labels, grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", step " << step
            << " (lr " << linear_decay_lr(config.learning_rate, step, total_steps)
            << ")";
        throw DataError(msg.str());
      }
      epoch_loss += static_cast<double>(loss) * static_cast<double>(end - start);
      opt.step(model.net.parameters(), grad,
               linear_decay_lr(config.learning_rate, step, total_steps));
      ++step;
    }
    if (log != nullptr) log->epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  if (log != nullptr) log->steps = step;
  for (float v : model.net.parameters()) {
    if (!std::isfinite(v)) throw DataError("train: non-finite weights");
  }
  return model;
}

std::string serialize_model(const JudgeModel& model) {
  const auto& prov = model.provenance;
  ByteWriter w;
  w.put_bytes(std::string_view(kModelMagic, 4));
  w.put_u32(kModelFormatVersion);
  w.put_u16(static_cast<std::uint16_t>(prov.model_id.size()));
  w.put_bytes(prov.model_id);
  w.put_i32(prov.layer_index);
  w.put_u8(static_cast<std::uint8_t>(prov.pooling));
  w.put_u8(prov.with_reference ? 1 : 0);
  w.put_u32(prov.reference_dim);
  w.put_u32(static_cast<std::uint32_t>(model.net.input_dim()));
  w.put_u32(static_cast<std::uint32_t>(model.net.hidden_dim()));
  w.put_f32(model.tau);
  w.put_f32s(model.net.parameters());
  w.put_u64(fnv1a64(w.bytes()));
  return w.take();
}

JudgeModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < 12) throw DataError("model file truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  ByteReader in(body);
  if (in.get_bytes(4, "magic") != std::string_view(kModelMagic, 4)) {
    throw DataError("bad magic: not a judge model file");
  }
  auto version = in.get_u32("version");
  if (version != kModelFormatVersion) {
    throw DataError("unsupported model version " + std::to_string(version));
  }
  ByteReader tail(bytes.substr(bytes.size() - 8));
  if (tail.get_u64("checksum") != fnv1a64(body)) {
    throw DataError("model checksum mismatch (corrupt file)");
  }
  JudgeModel model;
  auto& prov = model.provenance;
  auto len = in.get_u16("model_id length");
  prov.model_id = std::string(in.get_bytes(len, "model_id"));
  prov.layer_index = in.get_i32("layer_index");
  auto pooling = in.get_u8("pooling");
  if (pooling > 1) throw DataError("invalid pooling byte in model file");
  prov.pooling = static_cast<Pooling>(pooling);
  prov.with_reference = in.get_u8("with_reference") != 0;
  prov.reference_dim = in.get_u32("reference_dim");
  auto input_dim = in.get_u32("input_dim");
  auto hidden_dim = in.get_u32("hidden_dim");
  if (input_dim == 0 || hidden_dim == 0) {
    throw DataError("model dimensions must be >= 1");
  }
  if (prov.with_reference ? prov.reference_dim >= input_dim
                          : prov.reference_dim != 0) {
    throw DataError("model reference_dim is inconsistent with input_dim");
  }
  model.tau = in.get_f32("tau");
  if (!(model.tau > 0.0f && model.tau < 1.0f)) {
    throw DataError("model tau outside (0, 1)");
  }
  model.net = GatedMlp<float>(input_dim, hidden_dim);
  in.get_f32s(model.net.parameters(), "weights");
  for (float v : model.net.parameters()) {
    if (!std::isfinite(v)) throw DataError("non-finite weight in model file");
  }
  if (!in.at_end()) throw DataError("trailing bytes in model file");
  return model;
}

void save_model(const JudgeModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_model(model));
}

JudgeModel load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace isacl
