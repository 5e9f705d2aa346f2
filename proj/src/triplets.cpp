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

#include "isacl/triplets.hpp"

#include <fstream>
#include <unordered_map>

#include "isacl/error.hpp"
#include "json.hpp"

namespace isacl {
namespace {

using nlohmann::json;

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::string required_string(const json& obj, const char* key,
                            std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw DataError(line_error(line, std::string("missing field '") + key + "'"));
  }
  if (!it->is_string()) {
    throw DataError(
        line_error(line, std::string("field '") + key + "' must be a string"));
  }
  return it->get<std::string>();
}

std::optional<double> optional_unit_score(const json& obj, const char* key,
                                          std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw DataError(
        line_error(line, std::string("field '") + key + "' must be a number"));
  }
  double v = it->get<double>();
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DataError(line_error(
        line, std::string("field '") + key + "' must lie in [0, 1]"));
  }
  return v;
}

json parse_line(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(line_error(line, std::string("malformed JSON: ") + e.what()));
  }
  if (!obj.is_object()) throw DataError(line_error(line, "expected an object"));
  return obj;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

// Calls fn(obj, line_no) for each non-blank line and enforces id uniqueness.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::unordered_map<std::string, std::size_t> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    json obj = parse_line(text, line);
    std::string id = required_string(obj, "id", line);
    auto [it, inserted] = seen.emplace(id, line);
    if (!inserted) {
      throw DataError("duplicate id '" + id + "' on lines " +
                      std::to_string(it->second) + " and " +
                      std::to_string(line));
    }
    fn(obj, std::move(id), line);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

}  // namespace

std::optional<double> Triplet::score(std::string_view field) const {
  if (field == "rouge_l_f") return rouge_l_f;
  if (field == "rouge_1_f") return rouge_1_f;
  auto it = aux.find(std::string(field));
  if (it == aux.end()) return std::nullopt;
  return it->second;
}

std::vector<Triplet> parse_triplets(std::istream& in) {
  std::vector<Triplet> out;
  for_each_record(in, [&](const json& obj, std::string id, std::size_t line) {
    Triplet t;
    t.id = std::move(id);
    t.input = required_string(obj, "input", line);
    t.output = required_string(obj, "output", line);
    t.reference = required_string(obj, "reference", line);
    t.rouge_l_f = optional_unit_score(obj, "rouge_l_f", line);
    t.rouge_1_f = optional_unit_score(obj, "rouge_1_f", line);
    if (auto it = obj.find("aux"); it != obj.end() && !it->is_null()) {
      if (!it->is_object()) {
        throw DataError(line_error(line, "field 'aux' must be an object"));
      }
      for (const auto& [name, value] : it->items()) {
        if (!value.is_number()) {
          throw DataError(
              line_error(line, "aux score '" + name + "' must be a number"));
        }
        t.aux.emplace(name, value.get<double>());
      }
    }
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<Triplet> read_triplets(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_triplets(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string triplet_to_json_line(const Triplet& t) {
  json obj = {{"id", t.id},
              {"input", t.input},
              {"output", t.output},
              {"reference", t.reference}};
  if (t.rouge_l_f) obj["rouge_l_f"] = *t.rouge_l_f;
  if (t.rouge_1_f) obj["rouge_1_f"] = *t.rouge_1_f;
  if (!t.aux.empty()) obj["aux"] = t.aux;
  return obj.dump();
}

void write_triplets(std::ostream& out, std::span<const Triplet> triplets) {
  for (const auto& t : triplets) out << triplet_to_json_line(t) << '\n';
}

void write_triplets(const std::filesystem::path& path,
                    std::span<const Triplet> triplets) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_triplets(out, triplets);
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<RefPair> parse_pairs(std::istream& in) {
  std::vector<RefPair> out;
  for_each_record(in, [&](const json& obj, std::string id, std::size_t line) {
    RefPair p;
    p.id = std::move(id);
    p.input = required_string(obj, "input", line);
    p.reference = required_string(obj, "reference", line);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<RefPair> read_pairs(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_pairs(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace isacl
