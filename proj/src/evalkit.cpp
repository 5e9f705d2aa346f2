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

#include "isacl/evalkit.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <memory>
#include <sstream>

#include "isacl/error.hpp"
#include "json.hpp"

namespace isacl {
namespace {

using nlohmann::json;

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

json provenance_json(const DatasetProvenance& p) {
  return {{"model_id", p.model_id},
          {"layer_index", p.layer_index},
          {"pooling", std::string(pooling_name(p.pooling))},
          {"with_reference", p.with_reference},
          {"reference_dim", p.reference_dim}};
}

}  // namespace

EvalReport evaluate(std::span<const std::uint8_t> decisions,
                    std::span<const std::uint8_t> labels) {
  if (decisions.empty()) throw InvalidArgument("evaluate: empty input");
  if (decisions.size() != labels.size()) {
    throw InvalidArgument("evaluate: decisions and labels differ in length");
  }
  EvalReport r;
  auto& c = r.counts;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto d = decisions[i];
    const auto y = labels[i];
    if (d > 1 || y > 1) {
      throw InvalidArgument("evaluate: values must be 0 or 1 (index " +
                            std::to_string(i) + ")");
    }
    if (d == 1 && y == 1) ++c.tp;
    else if (d == 1 && y == 0) ++c.fp;
    else if (d == 0 && y == 1) ++c.fn;
    else ++c.tn;
  }
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

EvalReport evaluate_model(const JudgeModel& model, const LabeledDataset& test) {
  if (test.feature_dim != model.input_dim()) {
    throw DimensionError("test set has " + std::to_string(test.feature_dim) +
                         " features, model expects " +
                         std::to_string(model.input_dim()));
  }
  std::vector<std::uint8_t> decisions(test.size());
  double latency = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto p = predict_features(model, test.row(i));
    decisions[i] = static_cast<std::uint8_t>(p.decision);
    latency += p.latency_seconds;
  }
  EvalReport r = evaluate(decisions, test.labels);
  r.mean_latency_seconds = latency / static_cast<double>(test.size());
  r.provenance = model.provenance;
  r.tau = model.tau;
  return r;
}

std::string report_to_json(const EvalReport& r, bool include_timing) {
  json j = {{"positive_class", "leak"},
            {"tp", r.counts.tp},
            {"fp", r.counts.fp},
            {"fn", r.counts.fn},
            {"tn", r.counts.tn},
            {"accuracy", r.accuracy},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"tau", r.tau},
            {"provenance", provenance_json(r.provenance)}};
  j["division_p"] = r.division_p ? json(*r.division_p) : json(nullptr);
  if (include_timing) j["mean_latency_seconds"] = r.mean_latency_seconds;
  return j.dump(2);
}

std::string report_to_text(const EvalReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "confusion (positive = leak)\n"
      << "                 actual leak   actual non-disclosure\n"
      << "  predicted leak " << std::setw(11) << r.counts.tp << "   "
      << std::setw(21) << r.counts.fp << "\n"
      << "  predicted non  " << std::setw(11) << r.counts.fn << "   "
      << std::setw(21) << r.counts.tn << "\n"
      << "accuracy  " << r.accuracy << "\n"
      << "precision " << r.precision << "\n"
      << "recall    " << r.recall << "\n"
      << "f1        " << r.f1 << "\n"
      << std::setprecision(6) << "latency   " << r.mean_latency_seconds
      << " s/datapoint\n";
  return out.str();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<double> run_baseline_command(const std::string& command) {
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(command.c_str(), "r"),
                                             pclose);
  if (!pipe) throw Error("cannot start baseline command: " + command);
  std::string output;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe.get())) > 0) {
    output.append(buf, n);
  }
  const int status = pclose(pipe.release());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("baseline command failed (status " + std::to_string(status) +
                "): " + command);
  }

  std::vector<double> latencies;
  std::istringstream lines(output);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error("baseline output line " + std::to_string(line_no) +
                  " is not JSON or a number");
    }
    double v;
    if (j.is_number()) {
      v = j.get<double>();
    } else if (j.is_object() && j.contains("latency_seconds") &&
               j["latency_seconds"].is_number()) {
      v = j["latency_seconds"].get<double>();
    } else {
      throw Error("baseline output line " + std::to_string(line_no) +
                  " has no numeric latency_seconds");
    }
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error("baseline latency must be finite and >= 0");
    }
    latencies.push_back(v);
  }
  if (latencies.empty()) throw Error("baseline command reported no latencies");
  return latencies;
}

LatencyReport latency_bench(const JudgeModel& model, const LabeledDataset& rows,
                            const std::optional<std::string>& baseline_command) {
  if (rows.empty()) throw InvalidArgument("latency_bench: no datapoints");
  if (rows.feature_dim != model.input_dim()) {
    throw DimensionError("latency_bench: feature dim does not match model");
  }
  const std::size_t count = std::max(rows.size(), kMinLatencyDatapoints);
  std::vector<double> times;
  times.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    times.push_back(predict_features(model, rows.row(i % rows.size())).latency_seconds);
  }
  LatencyReport r;
  r.datapoints = count;
  double sum = 0.0;
  for (double t : times) sum += t;
  r.mean_seconds = sum / static_cast<double>(count);
  r.p95_seconds = percentile(times, 0.95);
  if (baseline_command && !baseline_command->empty()) {
    auto base = run_baseline_command(*baseline_command);
    double bsum = 0.0;
    for (double t : base) bsum += t;
    r.baseline_mean_seconds = bsum / static_cast<double>(base.size());
    r.baseline_p95_seconds = percentile(base, 0.95);
    if (r.mean_seconds > 0.0) r.speedup = *r.baseline_mean_seconds / r.mean_seconds;
  }
  return r;
}

std::string latency_to_json(const LatencyReport& r) {
  json j = {{"datapoints", r.datapoints},
            {"is_mean_seconds", r.mean_seconds},
            {"is_p95_seconds", r.p95_seconds}};
  if (r.baseline_mean_seconds) {
    j["baseline_mean_seconds"] = *r.baseline_mean_seconds;
    j["baseline_p95_seconds"] = *r.baseline_p95_seconds;
  }
  if (r.speedup) j["speedup"] = *r.speedup;
  return j.dump(2);
}

}  // namespace isacl
