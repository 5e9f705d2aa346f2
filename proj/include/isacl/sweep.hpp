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

// label -> split -> train -> evaluate, and ablation sweeps over one axis.

#ifndef ISACL_SWEEP_HPP_
#define ISACL_SWEEP_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isacl/evalkit.hpp"
#include "isacl/judge.hpp"
#include "isacl/labeler.hpp"

namespace isacl {

struct CorpusInputs {
  StateFile states;
  std::vector<Triplet> triplets;
  std::optional<EmbeddingMap> references;
};

struct PipelineConfig {
  PartitionConfig partition;
  std::string score_field = "rouge_l_f";
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  TrainConfig train;
  bool with_reference = false;
};

struct PipelineResult {
  EvalReport report;
  PartitionSummary summary;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double train_seconds = 0.0;
};

// Throws DataError when with_reference is set but the corpus has no
// reference embeddings.
PipelineResult run_pipeline(const CorpusInputs& corpus,
                            const PipelineConfig& config);

enum class SweepAxis { kDivisionP, kLayer, kPooling, kRagOnOff };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view sweep_axis_name(SweepAxis axis);

struct SweepRow {
  std::string value;   // axis value as given
  std::string method;  // "IS-w/RAG" or "IS-w/oRAG"
  PipelineResult result;
};

// Supplies the corpus for one axis value. DivisionP and RagOnOff sweeps call
// it with the value too and may return the same corpus every time; Layer and
// Pooling sweeps are expected to load one state file per value and throw
// DataError when it is missing.
using CorpusProvider = std::function<CorpusInputs(std::string_view value)>;

// One full pipeline run per value with the base config's seeds.
//   DivisionP  value is p
//   RagOnOff   value is "on"/"off" (also "w/RAG"/"w/oRAG", "1"/"0")
//   Layer, Pooling  value only selects the corpus
std::vector<SweepRow> sweep(SweepAxis axis, std::span<const std::string> values,
                            const PipelineConfig& base,
                            const CorpusProvider& corpus_for);

// Columns: method, axis value, division, ACC, F1 (and time when
// include_timing). Without timing the output is byte-identical across runs
// with the same seeds.
std::string sweep_to_json(SweepAxis axis, std::span<const SweepRow> rows,
                          bool include_timing = true);
std::string sweep_to_text(SweepAxis axis, std::span<const SweepRow> rows);

}  // namespace isacl

#endif  // ISACL_SWEEP_HPP_
