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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "isacl/error.hpp"
#include "isacl/optimizer.hpp"
#include "isacl/synthetic.hpp"
#include "grad_check.hpp"
#include "test_util.hpp"

namespace isacl {
namespace {

// Straight-line recomputation of the forward pass in long double.
long double OracleLogit(GatedMlp<double>& m, const std::vector<double>& x) {
  const std::size_t d = m.input_dim(), h = m.hidden_dim();
  long double out = m.b_down();
  for (std::size_t k = 0; k < h; ++k) {
    long double up = m.b_up()[k], gate = m.b_gate()[k];
    for (std::size_t j = 0; j < d; ++j) {
      up += static_cast<long double>(m.w_up()[k * d + j]) * x[j];
      gate += static_cast<long double>(m.w_gate()[k * d + j]) * x[j];
    }
    const long double silu = gate / (1.0L + std::exp(-gate));
    out += static_cast<long double>(m.w_down()[k]) * up * silu;
  }
  return out;
}

TEST(GatedMlpTest, ZeroModelGivesHalf) {
  GatedMlp<float> m(5, 3);
  std::fill(m.parameters().begin(), m.parameters().end(), 0.0f);
  const std::vector<float> x = {1, 2, 3, 4, 5};
  EXPECT_EQ(m.logit(x), 0.0f);
  EXPECT_EQ(sigmoid(0.0), 0.5);
}

TEST(GatedMlpTest, ClosedGateKillsThePath) {
  GatedMlp<double> m(2, 1);
  std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
  m.w_up()[0] = 1;
  m.w_gate()[1] = 1;
  m.w_down()[0] = 1;
  const std::vector<double> x = {2, 0};
  EXPECT_EQ(m.logit(x), 0.0);
}

TEST(GatedMlpTest, HandChosenWeightsMatchOracle) {
  GatedMlp<double> m(2, 2);
  const std::vector<double> params = {0.3, -0.2, 0.5, 0.1,   // w_up
                                      0.05, -0.1,            // b_up
                                      -0.4, 0.7, 0.2, 0.6,   // w_gate
                                      0.0, 0.15,             // b_gate
                                      1.1, -0.8,             // w_down
                                      0.25};                 // b_down
  std::copy(params.begin(), params.end(), m.parameters().begin());
  const std::vector<double> x = {0.9, -1.3};
  EXPECT_NEAR(m.logit(x), static_cast<double>(OracleLogit(m, x)), 1e-12);
  auto f = m.cast<float>();
  const std::vector<float> xf = {0.9f, -1.3f};
  EXPECT_NEAR(f.logit(xf), static_cast<double>(OracleLogit(m, x)), 1e-6);
}

TEST(GatedMlpTest, RandomModelsMatchOracle) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 20; ++t) {
    GatedMlp<double> m(1 + gen() % 16, 1 + gen() % 8);
    Rng rng(t);
    m.init_uniform(rng);
    std::vector<double> x(m.input_dim());
    for (auto& v : x) v = normal(gen);
    ASSERT_NEAR(m.logit(x), static_cast<double>(OracleLogit(m, x)), 1e-12);
  }
}

TEST(GatedMlpTest, InitIsWithinFanInBounds) {
  GatedMlp<float> m(16, 8);
  Rng rng(3);
  m.init_uniform(rng);
  for (float w : m.w_up()) ASSERT_LE(std::abs(w), 0.25f);
  for (float w : m.w_down()) ASSERT_LE(std::abs(w), 1.0f / std::sqrt(8.0f));
}

TEST(LossTest, ClosedForms) {
  GatedMlp<double> m(3, 2);
  std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
  const std::vector<double> x = {1, 2, 3};
  const std::vector<std::span<const double>> rows = {x};
  const std::vector<double> one = {1.0};
  EXPECT_NEAR(m.loss(rows, one), std::log(2.0), 1e-15);
  m.b_down() = 40.0;
  EXPECT_LT(m.loss(rows, one), 1e-17);
  m.b_down() = -800.0;  // stays finite in log space
  EXPECT_NEAR(m.loss(rows, one), 800.0, 1e-9);
  EXPECT_THROW(m.loss({}, {}), InvalidArgument);
}

TEST(GradientTest, MatchesCentralDifferencesOnRandomModels) {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 25; ++t) {
    const std::size_t d = 1 + gen() % 16, h = 1 + gen() % 8;
    const auto worst = testing::worst_gradient_error(d, h, 6, gen);
    ASSERT_LT(worst, 1e-4) << "d=" << d << " h=" << h;
  }
}

TEST(AdamWTest, ZeroLearningRateLeavesParametersAlone) {
  std::vector<double> p = {1.0, -2.0, 3.0};
  const std::vector<double> g = {0.5, 0.5, -1.0};
  AdamW<double> opt(3, {});
  for (int i = 0; i < 10; ++i) opt.step(p, g, 0.0);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(AdamWTest, ZeroGradientAppliesOnlyDecay) {
  std::vector<double> p = {1.0, -2.0};
  const std::vector<double> g = {0.0, 0.0};
  AdamW<double> opt(2, {0.9, 0.999, 1e-8, 0.1});
  opt.step(p, g, 0.5);
  EXPECT_DOUBLE_EQ(p[0], 0.95);
  EXPECT_DOUBLE_EQ(p[1], -1.9);
}

TEST(AdamWTest, FirstStepMovesByLearningRate) {
  // Bias correction makes the first Adam step lr * sign(g).
  std::vector<double> p = {0.0, 0.0};
  const std::vector<double> g = {3.0, -0.01};
  AdamW<double> opt(2, {0.9, 0.999, 0.0, 0.0});
  opt.step(p, g, 0.1);
  EXPECT_NEAR(p[0], -0.1, 1e-12);
  EXPECT_NEAR(p[1], 0.1, 1e-12);
}

TEST(AdamWTest, LinearDecaySchedule) {
  EXPECT_DOUBLE_EQ(linear_decay_lr(1e-3, 0, 100), 1e-3);
  EXPECT_DOUBLE_EQ(linear_decay_lr(1e-3, 50, 100), 5e-4);
  EXPECT_DOUBLE_EQ(linear_decay_lr(1e-3, 100, 100), 0.0);
}

TEST(AdamWTest, ConvexSurrogateLossNeverIncreases) {
  // Full-batch logistic regression: convex, smooth, small steps.
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  const std::size_t n = 200, d = 5;
  std::vector<double> x(n * d), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) {
      x[i * d + j] = normal(gen);
      s += x[i * d + j] * (j + 1);
    }
    y[i] = s + normal(gen) > 0 ? 1.0 : 0.0;
  }
  std::vector<double> w(d + 1, 0.0), grad(d + 1);
  auto loss_grad = [&](bool fill) {
    double loss = 0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double z = w[d];
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[i * d + j];
      loss += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y[i] * z;
      if (fill) {
        const double r = sigmoid(z) - y[i];
        for (std::size_t j = 0; j < d; ++j) grad[j] += r * x[i * d + j] / n;
        grad[d] += r / n;
      }
    }
    return loss / n;
  };
  AdamW<double> opt(d + 1, {0.9, 0.999, 1e-8, 0.0});
  double prev = loss_grad(true);
  const int steps = 300;
  for (int s = 0; s < steps; ++s) {
    opt.step(w, grad, linear_decay_lr(0.01, s, steps));
    const double cur = loss_grad(true);
    ASSERT_LE(cur, prev + 1e-12) << "step " << s;
    prev = cur;
  }
  EXPECT_LT(prev, 0.3);
}

LabeledDataset SignOfFirstCoordinate(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> mag(0.1f, 1.0f), other(-1.0f, 1.0f);
  LabeledDataset ds;
  ds.feature_dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    const std::vector<float> row = {pos ? mag(gen) : -mag(gen), other(gen)};
    ds.add("r" + std::to_string(i), row, pos ? 1 : 0);
  }
  return ds;
}

TEST(TrainTest, SeparableToyReachesFullTrainingAccuracy) {
  const auto ds = SignOfFirstCoordinate(100, 1);
  TrainConfig c;
  c.hidden_dim = 32;
  TrainLog log;
  const auto model = train(ds, c, &log);
  ASSERT_EQ(log.epoch_loss.size(), 250u);
  EXPECT_EQ(log.steps, 250 * 25);
  EXPECT_LT(log.epoch_loss.back(), log.epoch_loss.front());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ASSERT_EQ(predict_features(model, ds.row(i)).decision, ds.labels[i]) << i;
  }
}

TEST(TrainTest, SameSeedIsBitIdentical) {
  const auto ds = SignOfFirstCoordinate(40, 2);
  TrainConfig c;
  c.epochs = 5;
  c.hidden_dim = 16;
  c.seed = 99;
  const auto a = train(ds, c);
  const auto b = train(ds, c);
  EXPECT_EQ(a, b);
  c.seed = 100;
  EXPECT_FALSE(train(ds, c) == a);
}

TEST(TrainTest, ZeroLearningRateKeepsInitialWeights) {
  const auto ds = SignOfFirstCoordinate(20, 3);
  TrainConfig c;
  c.epochs = 3;
  c.hidden_dim = 8;
  c.learning_rate = 0.0;
  c.seed = 5;
  const auto model = train(ds, c);
  GatedMlp<float> init(2, 8);
  Rng rng(5);
  init.init_uniform(rng);
  EXPECT_EQ(model.net, init);
}

TEST(TrainTest, RejectsDegenerateInputs) {
  LabeledDataset one_class;
  one_class.feature_dim = 1;
  const float v = 1;
  one_class.add("a", std::span(&v, 1), 1);
  one_class.add("b", std::span(&v, 1), 1);
  EXPECT_THROW(train(one_class, {}), DataError);
  EXPECT_THROW(train(LabeledDataset{}, {}), DataError);
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(train(SignOfFirstCoordinate(4, 1), bad), InvalidArgument);
}

TEST(TrainTest, DivergenceIsReportedWithDiagnostics) {
  auto ds = SignOfFirstCoordinate(8, 4);
  for (auto& f : ds.features) f *= 1e30f;
  TrainConfig c;
  c.epochs = 2;
  c.hidden_dim = 4;
  c.learning_rate = 1e6;
  try {
    train(ds, c);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

JudgeModel ZeroModel(std::size_t state_dim, std::uint32_t ref_dim) {
  JudgeModel m;
  m.net = GatedMlp<float>(state_dim + ref_dim, 2);
  std::fill(m.net.parameters().begin(), m.net.parameters().end(), 0.0f);
  m.provenance.with_reference = ref_dim > 0;
  m.provenance.reference_dim = ref_dim;
  return m;
}

TEST(PredictTest, ThresholdIsInclusive) {
  EXPECT_EQ(decide(0.5, 0.5), 1);
  EXPECT_EQ(decide(std::nextafter(0.5, 0.0), 0.5), 0);
  const auto m = ZeroModel(3, 0);
  const std::vector<float> s = {1, 2, 3};
  const auto p = predict(m, s);
  EXPECT_EQ(p.probability, 0.5);
  EXPECT_EQ(p.decision, 1);
}

TEST(PredictTest, DecisionIsMonotoneInLogit) {
  for (double tau : {0.1, 0.5, 0.9}) {
    int prev = 0;
    for (double z = -10; z <= 10; z += 0.01) {
      const int d = decide(sigmoid(z), tau);
      ASSERT_GE(d, prev);
      prev = d;
    }
  }
}

TEST(PredictTest, ReferenceHandling) {
  auto plain = ZeroModel(3, 0);
  const std::vector<float> s = {1, 2, 3}, r = {9, 9};
  EXPECT_EQ(predict(plain, s, std::span<const float>(r)).probability,
            predict(plain, s).probability);
  EXPECT_THROW(predict(plain, std::vector<float>{1, 2}), DimensionError);

  auto rag = ZeroModel(3, 2);
  rag.net.w_up()[3] = 1.0f;
  rag.net.w_gate()[3] = 1.0f;
  rag.net.w_down()[0] = 1.0f;
  EXPECT_THROW(predict(rag, s), InvalidArgument);
  EXPECT_THROW(predict(rag, s, std::span<const float>(s)), DimensionError);
  const auto p = predict(rag, s, std::span<const float>(r));
  EXPECT_NEAR(p.logit, 9.0 * 9.0 / (1.0 + std::exp(-9.0)), 1e-4);
}

TEST(PredictTest, RagModelSeparatesWhatStatesAloneCannot) {
  SyntheticSpec spec;
  spec.mode = SyntheticMode::kRagDependent;
  spec.dim = 8;
  spec.count = 400;
  spec.sigma = 0.3;
  spec.seed = 3;
  const auto data = gen_synthetic(spec);
  const auto with = with_references(data.dataset, data.references);
  TrainConfig c;
  c.epochs = 60;
  c.hidden_dim = 32;
  auto [tr, te] = split(with, 0.8, 0);
  const auto rag = train(tr, c);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < te.size(); ++i) {
    correct += predict_features(rag, te.row(i)).decision == te.labels[i];
  }
  EXPECT_GE(static_cast<double>(correct) / te.size(), 0.85);
}

TEST(ModelFileTest, RoundTripIsBitExact) {
  testing::TempDir dir;
  const auto ds = SignOfFirstCoordinate(30, 5);
  TrainConfig c;
  c.epochs = 3;
  c.hidden_dim = 8;
  c.tau = 0.7f;
  auto model = train(ds, c);
  model.provenance.model_id = "tiny";
  model.provenance.layer_index = 4;
  model.provenance.pooling = Pooling::kLastToken;
  save_model(model, dir / "m.bin");
  const auto back = load_model(dir / "m.bin");
  EXPECT_EQ(back, model);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ASSERT_EQ(predict_features(back, ds.row(i)).probability,
              predict_features(model, ds.row(i)).probability);
  }
  auto bytes = serialize_model(model);
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 3)), DataError);
  bytes[10] ^= 1;
  EXPECT_THROW(deserialize_model(bytes), DataError);
  EXPECT_THROW(load_model(dir / "absent.bin"), IoError);
}

}  // namespace
}  // namespace isacl
