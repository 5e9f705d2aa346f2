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

#include "isacl/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "isacl/error.hpp"
#include "isacl/random.hpp"

namespace isacl {

std::vector<PartitionLabel> partition(std::span<const double> scores,
                                      const PartitionConfig& config) {
  if (scores.empty()) throw InvalidArgument("partition: no scores");
  if (!(config.p > 0.0 && config.p <= 0.5)) {
    throw InvalidArgument("partition: p must lie in (0, 0.5], got " +
                          std::to_string(config.p));
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw InvalidArgument("partition: score " + std::to_string(i) +
                            " outside [0, 1]");
    }
  }

  const std::size_t n = scores.size();
  const auto k = static_cast<std::size_t>(
      std::floor(config.p * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  rng.shuffle(std::span(order));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });

  std::vector<PartitionLabel> labels(n, PartitionLabel::kDiscard);
  for (std::size_t r = 0; r < k; ++r) {
    labels[order[r]] = PartitionLabel::kLeak;
    labels[order[n - 1 - r]] = PartitionLabel::kNonDisclosure;
  }
  return labels;
}

PartitionSummary summarize_partition(std::span<const double> scores,
                                     std::span<const PartitionLabel> labels) {
  PartitionSummary s;
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    switch (labels[i]) {
      case PartitionLabel::kLeak:
        ++s.leak;
        upper = std::min(upper, scores[i]);
        break;
      case PartitionLabel::kNonDisclosure:
        ++s.non_disclosure;
        lower = std::max(lower, scores[i]);
        break;
      case PartitionLabel::kDiscard:
        ++s.discarded;
        break;
    }
  }
  s.upper_threshold = s.leak > 0 ? upper : 0.0;
  s.lower_threshold = s.non_disclosure > 0 ? lower : 0.0;
  return s;
}

void LabeledDataset::add(std::string id, std::span<const float> row,
                         std::uint8_t label) {
  if (row.size() != feature_dim) {
    throw DimensionError("row '" + id + "' has " + std::to_string(row.size()) +
                         " features, dataset has " +
                         std::to_string(feature_dim));
  }
  features.insert(features.end(), row.begin(), row.end());
  labels.push_back(label);
  ids.push_back(std::move(id));
}

std::size_t LabeledDataset::count_label(std::uint8_t label) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), label));
}

EmbeddingMap to_embedding_map(const StateFile& file) {
  EmbeddingMap map;
  map.reserve(file.records.size());
  for (const auto& r : file.records) map.emplace(r.id, r.vector);
  return map;
}

AssembledDataset assemble(const StateFile& states,
                          std::span<const Triplet> triplets,
                          const PartitionConfig& config,
                          std::string_view score_field,
                          const EmbeddingMap* references) {
  std::unordered_map<std::string_view, const Triplet*> by_id;
  by_id.reserve(triplets.size());
  for (const auto& t : triplets) by_id.emplace(t.id, &t);

  std::vector<double> scores;
  scores.reserve(states.records.size());
  for (const auto& r : states.records) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      throw DataError("state record '" + r.id + "' has no matching triplet");
    }
    auto score = it->second->score(score_field);
    if (!score) {
      throw DataError("triplet '" + r.id + "' has no score '" +
                      std::string(score_field) + "'");
    }
    scores.push_back(*score);
  }

  std::size_t ref_dim = 0;
  if (references != nullptr) {
    bool first = true;
    for (const auto& r : states.records) {
      auto it = references->find(r.id);
      if (it == references->end()) {
        throw DataError("no reference embedding for id '" + r.id + "'");
      }
      if (first) {
        ref_dim = it->second.size();
        first = false;
      } else if (it->second.size() != ref_dim) {
        throw DimensionError("reference embedding for '" + r.id + "' has dim " +
                             std::to_string(it->second.size()) + ", expected " +
                             std::to_string(ref_dim));
      }
    }
    if (ref_dim == 0) throw DimensionError("reference embeddings are empty");
  }

  auto labels = partition(scores, config);

  AssembledDataset out;
  out.summary = summarize_partition(scores, labels);
  auto& ds = out.dataset;
  ds.feature_dim = states.header.dim + ref_dim;
  ds.provenance = {states.header.model_id, states.header.layer_index,
                   states.header.pooling, references != nullptr,
                   static_cast<std::uint32_t>(ref_dim)};
  std::vector<float> row(ds.feature_dim);
  for (std::size_t i = 0; i < states.records.size(); ++i) {
    if (labels[i] == PartitionLabel::kDiscard) continue;
    const auto& rec = states.records[i];
    std::copy(rec.vector.begin(), rec.vector.end(), row.begin());
    if (references != nullptr) {
      const auto& ref = references->at(rec.id);
      std::copy(ref.begin(), ref.end(), row.begin() + rec.vector.size());
    }
    ds.add(rec.id, row, labels[i] == PartitionLabel::kLeak ? 1 : 0);
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                double train_fraction,
                                                std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train_fraction must lie in (0, 1)");
  }
  std::vector<bool> in_train(dataset.size(), false);
  Rng rng(seed);
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.labels[i] == cls) members.push_back(i);
    }
    if (members.size() < 2) {
      throw DataError("split: class " + std::to_string(cls) + " has " +
                      std::to_string(members.size()) +
                      " rows, need at least 2");
    }
    auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) * train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    rng.shuffle(std::span(members));
    for (std::size_t j = 0; j < n_train; ++j) in_train[members[j]] = true;
  }

  LabeledDataset train, test;
  for (auto* part : {&train, &test}) {
    part->feature_dim = dataset.feature_dim;
    part->provenance = dataset.provenance;
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (in_train[i] ? train : test)
        .add(dataset.ids[i], dataset.row(i), dataset.labels[i]);
  }
  return {std::move(train), std::move(test)};
}

StateFile to_state_file(const LabeledDataset& dataset) {
  StateFile file;
  file.header.model_id = dataset.provenance.model_id;
  file.header.layer_index = dataset.provenance.layer_index;
  file.header.pooling = dataset.provenance.pooling;
  file.header.dim = static_cast<std::uint32_t>(dataset.feature_dim);
  file.header.count = dataset.size();
  file.records.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto row = dataset.row(i);
    file.records.push_back({dataset.ids[i], to_state_label(dataset.labels[i]),
                            std::vector<float>(row.begin(), row.end())});
  }
  return file;
}

LabeledDataset from_state_file(const StateFile& file, bool with_reference,
                               std::uint32_t reference_dim) {
  if (with_reference && reference_dim >= file.header.dim) {
    throw DimensionError("reference_dim " + std::to_string(reference_dim) +
                         " leaves no state features in dim " +
                         std::to_string(file.header.dim));
  }
  LabeledDataset ds;
  ds.feature_dim = file.header.dim;
  ds.provenance = {file.header.model_id, file.header.layer_index,
                   file.header.pooling, with_reference,
                   with_reference ? reference_dim : 0};
  for (const auto& r : file.records) {
    if (r.label == StateLabel::kUnlabeled) {
      throw DataError("record '" + r.id + "' is unlabeled");
    }
    ds.add(r.id, r.vector, to_training_label(r.label));
  }
  return ds;
}

}  // namespace isacl
