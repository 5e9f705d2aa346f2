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

// Classification metrics and latency measurement for the judge. The
// positive class throughout is Leak (label 1).

#ifndef ISACL_EVALKIT_HPP_
#define ISACL_EVALKIT_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isacl/judge.hpp"
#include "isacl/labeler.hpp"

namespace isacl {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct EvalReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_latency_seconds = 0.0;

  // Configuration echo.
  DatasetProvenance provenance;
  std::optional<double> division_p;
  double tau = 0.5;
};

// Accuracy = (tp + tn) / N; precision and recall are 0 when their
// denominators are 0; F1 is 0 when precision + recall is 0.
// Throws InvalidArgument on empty or unequal-length inputs, or values
// outside {0, 1}.
EvalReport evaluate(std::span<const std::uint8_t> decisions,
                    std::span<const std::uint8_t> labels);

// Runs predict over every row and evaluates; latency covers predict only.
EvalReport evaluate_model(const JudgeModel& model, const LabeledDataset& test);

std::string report_to_json(const EvalReport& report, bool include_timing = true);
std::string report_to_text(const EvalReport& report);

struct LatencyReport {
  std::size_t datapoints = 0;
  double mean_seconds = 0.0;
  double p95_seconds = 0.0;
  std::optional<double> baseline_mean_seconds;
  std::optional<double> baseline_p95_seconds;
  // baseline mean / judge mean
  std::optional<double> speedup;
};

inline constexpr std::size_t kMinLatencyDatapoints = 100;

// Times predict_features over the rows, cycling through them until at least
// kMinLatencyDatapoints predictions have been made. When `baseline_command`
// is given it is run through /bin/sh; every non-empty stdout line must be a
// number or a JSON object with a numeric "latency_seconds" field, one per
// datapoint. A failing command throws Error.
LatencyReport latency_bench(const JudgeModel& model, const LabeledDataset& rows,
                            const std::optional<std::string>& baseline_command =
                                std::nullopt);

std::vector<double> run_baseline_command(const std::string& command);

// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

std::string latency_to_json(const LatencyReport& report);

}  // namespace isacl

#endif  // ISACL_EVALKIT_HPP_
