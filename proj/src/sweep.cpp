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

#include "isacl/sweep.hpp"

#include <chrono>
#include <charconv>
#include <iomanip>
#include <sstream>

#include "isacl/error.hpp"
#include "json.hpp"

namespace isacl {
namespace {

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

bool parse_on_off(std::string_view s) {
  if (s == "on" || s == "w/RAG" || s == "1" || s == "true") return true;
  if (s == "off" || s == "w/oRAG" || s == "0" || s == "false") return false;
  throw InvalidArgument("rag axis value must be on or off, got '" +
                        std::string(s) + "'");
}

std::string method_name(bool with_reference) {
  return with_reference ? "IS-w/RAG" : "IS-w/oRAG";
}

}  // namespace

PipelineResult run_pipeline(const CorpusInputs& corpus,
                            const PipelineConfig& config) {
  const EmbeddingMap* refs = nullptr;
  if (config.with_reference) {
    if (!corpus.references) {
      throw DataError("reference-augmented run requested but the corpus has "
                      "no reference embeddings");
    }
    refs = &*corpus.references;
  }
  auto assembled = assemble(corpus.states, corpus.triplets, config.partition,
                            config.score_field, refs);
  auto [train_set, test_set] =
      split(assembled.dataset, config.train_fraction, config.split_seed);

  PipelineResult result;
  result.summary = assembled.summary;
  result.train_rows = train_set.size();
  result.test_rows = test_set.size();
  const auto start = std::chrono::steady_clock::now();
  auto model = train(train_set, config.train);
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  result.report = evaluate_model(model, test_set);
  result.report.division_p = config.partition.p;
  return result;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "division-p" || name == "p") return SweepAxis::kDivisionP;
  if (name == "layer") return SweepAxis::kLayer;
  if (name == "pooling") return SweepAxis::kPooling;
  if (name == "rag") return SweepAxis::kRagOnOff;
  throw InvalidArgument("unknown sweep axis '" + std::string(name) +
                        "' (expected division-p, layer, pooling or rag)");
}

std::string_view sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kDivisionP: return "division-p";
    case SweepAxis::kLayer: return "layer";
    case SweepAxis::kPooling: return "pooling";
    case SweepAxis::kRagOnOff: return "rag";
  }
  return "unknown";
}

std::vector<SweepRow> sweep(SweepAxis axis, std::span<const std::string> values,
                            const PipelineConfig& base,
                            const CorpusProvider& corpus_for) {
  if (values.empty()) throw InvalidArgument("sweep: no axis values");
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    PipelineConfig config = base;
    switch (axis) {
      case SweepAxis::kDivisionP:
        config.partition.p = parse_double(value);
        break;
      case SweepAxis::kRagOnOff:
        config.with_reference = parse_on_off(value);
        break;
      case SweepAxis::kPooling:
        parse_pooling(value);  // validates the value
        break;
      case SweepAxis::kLayer:
        break;
    }
    auto corpus = corpus_for(value);
    if (axis == SweepAxis::kPooling &&
        corpus.states.header.pooling != parse_pooling(value)) {
      throw DataError("state file for pooling '" + value +
                      "' was written with pooling '" +
                      std::string(pooling_name(corpus.states.header.pooling)) +
                      "'");
    }
    SweepRow row;
    row.value = value;
    row.method = method_name(config.with_reference);
    row.result = run_pipeline(corpus, config);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_to_json(SweepAxis axis, std::span<const SweepRow> rows,
                          bool include_timing) {
  nlohmann::json out;
  out["axis"] = std::string(sweep_axis_name(axis));
  out["positive_class"] = "leak";
  auto& table = out["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    const auto& r = row.result.report;
    nlohmann::json j = {{"method", row.method},
                        {"value", row.value},
                        {"division", r.division_p.value_or(0.0)},
                        {"acc", r.accuracy},
                        {"f1", r.f1},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"tp", r.counts.tp},
                        {"fp", r.counts.fp},
                        {"fn", r.counts.fn},
                        {"tn", r.counts.tn},
                        {"train_rows", row.result.train_rows},
                        {"test_rows", row.result.test_rows},
                        {"upper_threshold", row.result.summary.upper_threshold},
                        {"lower_threshold", row.result.summary.lower_threshold},
                        {"layer_index", r.provenance.layer_index},
                        {"pooling", std::string(pooling_name(r.provenance.pooling))}};
    if (include_timing) {
      j["time"] = r.mean_latency_seconds;
      j["train_seconds"] = row.result.train_seconds;
    }
    table.push_back(std::move(j));
  }
  return out.dump(2);
}

std::string sweep_to_text(SweepAxis axis, std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << std::left << std::setw(11) << "method" << std::setw(12)
      << sweep_axis_name(axis) << std::setw(10) << "division" << std::setw(9)
      << "ACC" << std::setw(9) << "F1"
      << "time(s)\n";
  for (const auto& row : rows) {
    const auto& r = row.result.report;
    out << std::left << std::setw(11) << row.method << std::setw(12)
        << row.value << std::setw(10) << std::fixed << std::setprecision(2)
        << r.division_p.value_or(0.0) << std::setw(9) << std::setprecision(2)
        << 100.0 * r.accuracy << std::setw(9) << 100.0 * r.f1
        << std::setprecision(6) << r.mean_latency_seconds << "\n";
  }
  return out.str();
}

}  // namespace isacl
