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

// Quantile labeling of scored continuations and assembly of the judge's
// training set.
//
// Records are ranked by similarity score. The top floor(p*N) become Leak,
// the bottom floor(p*N) NonDisclosure, and the ambiguous middle band is
// discarded. Inside the library the positive class is Leak = 1; state files
// keep the on-disk byte encoding from state_io.hpp (Leak = 0).

#ifndef ISACL_LABELER_HPP_
#define ISACL_LABELER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "isacl/state_io.hpp"
#include "isacl/triplets.hpp"

namespace isacl {

enum class PartitionLabel : std::uint8_t { kLeak, kNonDisclosure, kDiscard };

struct PartitionConfig {
  double p = 0.2;  // division fraction, 0 < p <= 0.5
  std::uint64_t seed = 0;
};

struct PartitionSummary {
  std::size_t leak = 0;
  std::size_t non_disclosure = 0;
  std::size_t discarded = 0;
  // Realized thresholds: lowest score labeled Leak and highest score labeled
  // NonDisclosure. Zero when the corresponding class is empty.
  double upper_threshold = 0.0;
  double lower_threshold = 0.0;
};

// Throws InvalidArgument on empty input, p outside (0, 0.5], or scores
// outside [0, 1]. Ties are ordered by a seeded shuffle before ranking.
std::vector<PartitionLabel> partition(std::span<const double> scores,
                                      const PartitionConfig& config);

PartitionSummary summarize_partition(std::span<const double> scores,
                                     std::span<const PartitionLabel> labels);

struct DatasetProvenance {
  std::string model_id;
  std::int32_t layer_index = -1;
  Pooling pooling = Pooling::kMeanAllTokens;
  bool with_reference = false;
  // Trailing feature columns holding the reference embedding; 0 without RAG.
  std::uint32_t reference_dim = 0;

  friend bool operator==(const DatasetProvenance&,
                         const DatasetProvenance&) = default;
};

struct LabeledDataset {
  std::size_t feature_dim = 0;
  std::vector<float> features;        // row-major, size() x feature_dim
  std::vector<std::uint8_t> labels;   // 1 = Leak, 0 = NonDisclosure
  std::vector<std::string> ids;
  DatasetProvenance provenance;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const float> row(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  void add(std::string id, std::span<const float> row, std::uint8_t label);
  std::size_t count_label(std::uint8_t label) const;

  friend bool operator==(const LabeledDataset&,
                         const LabeledDataset&) = default;
};

using EmbeddingMap = std::unordered_map<std::string, std::vector<float>>;

EmbeddingMap to_embedding_map(const StateFile& file);

struct AssembledDataset {
  LabeledDataset dataset;
  PartitionSummary summary;
};

// Partitions the scores of the triplets matching the state records and keeps
// the labeled rows. Feature rows are the state vector, followed by the
// reference embedding when `references` is non-null.
AssembledDataset assemble(const StateFile& states,
                          std::span<const Triplet> triplets,
                          const PartitionConfig& config,
                          std::string_view score_field = "rouge_l_f",
                          const EmbeddingMap* references = nullptr);

// Stratified split. Each class contributes floor(n_c * train_fraction)
// training rows, clamped to [1, n_c - 1]. Throws if a class has < 2 rows.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                double train_fraction,
                                                std::uint64_t seed);

StateFile to_state_file(const LabeledDataset& dataset);

// Inverse of to_state_file. Unlabeled records are rejected.
LabeledDataset from_state_file(const StateFile& file, bool with_reference,
                               std::uint32_t reference_dim);

inline std::uint8_t to_training_label(StateLabel l) {
  return l == StateLabel::kLeak ? 1 : 0;
}
inline StateLabel to_state_label(std::uint8_t training_label) {
  return training_label == 1 ? StateLabel::kLeak : StateLabel::kNonDisclosure;
}

}  // namespace isacl

#endif  // ISACL_LABELER_HPP_
