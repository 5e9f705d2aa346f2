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

#include "isacl/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "isacl/error.hpp"
#include "isacl/random.hpp"

namespace isacl {
namespace {

void check_spec(const SyntheticSpec& spec) {
  if (spec.dim == 0) throw InvalidArgument("synthetic: dim must be >= 1");
  if (spec.count == 0 || spec.count % 2 != 0) {
    throw InvalidArgument("synthetic: count must be even and positive");
  }
  if (!(spec.sigma > 0.0)) throw InvalidArgument("synthetic: sigma must be > 0");
}

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

std::string record_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rec-%06zu", i);
  return buf;
}

DatasetProvenance synthetic_provenance() {
  return {"synthetic", -1, Pooling::kMeanAllTokens, false, 0};
}

std::vector<float> margin_state(Rng& rng, const std::vector<float>& u,
                                double t, double sigma) {
  std::vector<float> x(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    x[j] = static_cast<float>(t * u[j] + sigma * rng.normal());
  }
  return x;
}

// Pronounceable pseudo-words so tokenized text looks like prose.
std::vector<std::string> make_vocabulary(std::size_t size) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m",
                                            "n", "p", "r", "s", "t", "v", "z"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u"};
  std::vector<std::string> vocab;
  for (const char* o1 : kOnsets) {
    for (const char* v1 : kVowels) {
      for (const char* o2 : kOnsets) {
        for (const char* v2 : kVowels) {
          if (vocab.size() == size) return vocab;
          vocab.push_back(std::string(o1) + v1 + o2 + v2);
        }
      }
    }
  }
  return vocab;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  if (!out.empty()) out.push_back('.');
  return out;
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);
  SyntheticData out;
  auto& ds = out.dataset;
  ds.feature_dim = spec.dim;
  ds.provenance = synthetic_provenance();

  if (spec.mode == SyntheticMode::kSeparableGaussians) {
    const auto u = random_unit(rng, spec.dim);
    for (std::size_t i = 0; i < spec.count; ++i) {
      const std::uint8_t label = i % 2 == 0 ? 1 : 0;
      const double sign = label == 1 ? 1.0 : -1.0;
      ds.add(record_id(i), margin_state(rng, u, sign, spec.sigma), label);
    }
    return out;
  }

  // RagDependent: state and reference each sit at a random end of a shared
  // axis (+-u, the SeparableGaussians geometry) with isotropic noise. The
  // reference sign is then flipped to realize the target label, so a state's
  // distribution is the same for both classes.
  const auto u = random_unit(rng, spec.dim);
  out.references.reserve(spec.count);
  std::vector<float> s(spec.dim), r(spec.dim);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::uint8_t label = i % 2 == 0 ? 1 : 0;
    double ip = 0.0;
    do {
      const double a_s = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double a_r = rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        s[j] = static_cast<float>(a_s * u[j] + spec.sigma * rng.normal());
        r[j] = static_cast<float>(a_r * u[j] + spec.sigma * rng.normal());
      }
      ip = 0.0;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        ip += static_cast<double>(s[j]) * static_cast<double>(r[j]);
      }
    } while (ip == 0.0);
    if ((ip > 0.0) != (label == 1)) {
      for (auto& v : r) v = -v;
    }
    ds.add(record_id(i), s, label);
    out.references.push_back(r);
  }
  return out;
}

LabeledDataset with_references(const LabeledDataset& states,
                               const std::vector<std::vector<float>>& references) {
  if (references.size() != states.size()) {
    throw DimensionError("with_references: one reference per row required");
  }
  const std::size_t ref_dim = references.empty() ? 0 : references.front().size();
  LabeledDataset out;
  out.feature_dim = states.feature_dim + ref_dim;
  out.provenance = states.provenance;
  out.provenance.with_reference = true;
  out.provenance.reference_dim = static_cast<std::uint32_t>(ref_dim);
  std::vector<float> row(out.feature_dim);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (references[i].size() != ref_dim) {
      throw DimensionError("with_references: inconsistent reference dims");
    }
    auto s = states.row(i);
    std::copy(s.begin(), s.end(), row.begin());
    std::copy(references[i].begin(), references[i].end(),
              row.begin() + static_cast<std::ptrdiff_t>(s.size()));
    out.add(states.ids[i], row, states.labels[i]);
  }
  return out;
}

ScoredCorpus gen_scored_corpus(const SyntheticSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);
  const auto u = random_unit(rng, spec.dim);
  ScoredCorpus out;
  out.states.header.model_id = "synthetic";
  out.states.header.dim = static_cast<std::uint32_t>(spec.dim);
  out.states.header.count = spec.count;
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double t = rng.uniform(-1.0, 1.0);
    auto id = record_id(i);
    out.states.records.push_back(
        {id, StateLabel::kUnlabeled, margin_state(rng, u, t, spec.sigma)});
    Triplet trip;
    trip.id = id;
    trip.rouge_l_f = (t + 1.0) / 2.0;
    out.triplets.push_back(std::move(trip));
  }
  return out;
}

TextCorpus gen_text_corpus(const SyntheticSpec& spec,
                           std::size_t embedding_dim) {
  check_spec(spec);
  if (embedding_dim == 0) {
    throw InvalidArgument("synthetic: embedding_dim must be >= 1");
  }
  constexpr std::size_t kInputWords = 16;
  constexpr std::size_t kReferenceWords = 24;
  const auto vocab = make_vocabulary(1500);
  Rng rng(spec.seed);
  const auto u = random_unit(rng, spec.dim);

  TextCorpus out;
  out.states.header.model_id = "synthetic-text";
  out.states.header.dim = static_cast<std::uint32_t>(spec.dim);
  out.states.header.count = spec.count;
  out.embeddings.header.model_id = "synthetic-encoder";
  out.embeddings.header.dim = static_cast<std::uint32_t>(embedding_dim);
  out.embeddings.header.count = spec.count;

  auto word = [&] { return vocab[rng.index(vocab.size())]; };
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double t = rng.uniform(-1.0, 1.0);
    const double keep = (t + 1.0) / 2.0;
    std::vector<std::string> input, reference, output;
    for (std::size_t k = 0; k < kInputWords; ++k) input.push_back(word());
    for (std::size_t k = 0; k < kReferenceWords; ++k) reference.push_back(word());
    for (const auto& w : reference) {
      output.push_back(rng.uniform() < keep ? w : word());
    }
    Triplet trip;
    trip.id = record_id(i);
    trip.input = join(input);
    trip.reference = join(reference);
    trip.output = join(output);
    out.triplets.push_back(std::move(trip));
    out.states.records.push_back(
        {record_id(i), StateLabel::kUnlabeled, margin_state(rng, u, t, spec.sigma)});
    out.embeddings.records.push_back(
        {record_id(i), StateLabel::kUnlabeled, random_unit(rng, embedding_dim)});
  }
  return out;
}

}  // namespace isacl
