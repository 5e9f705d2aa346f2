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

// Line-delimited JSON records: triplets (id, input, output, reference, scores)
// and reference pairs (id, input, reference).

#ifndef ISACL_TRIPLETS_HPP_
#define ISACL_TRIPLETS_HPP_

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace isacl {

struct Triplet {
  std::string id;
  std::string input;
  std::string output;
  std::string reference;
  std::optional<double> rouge_l_f;
  std::optional<double> rouge_1_f;
  std::map<std::string, double> aux;

  // rouge_l_f for "rouge_l_f", rouge_1_f for "rouge_1_f", otherwise aux[name].
  std::optional<double> score(std::string_view field) const;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct RefPair {
  std::string id;
  std::string input;
  std::string reference;
};

// Parses one object per line; blank lines are skipped. Errors carry the
// 1-based line number. Duplicate ids cite both lines.
std::vector<Triplet> parse_triplets(std::istream& in);
std::vector<Triplet> read_triplets(const std::filesystem::path& path);

void write_triplets(std::ostream& out, std::span<const Triplet> triplets);
void write_triplets(const std::filesystem::path& path,
                    std::span<const Triplet> triplets);

std::string triplet_to_json_line(const Triplet& t);

std::vector<RefPair> parse_pairs(std::istream& in);
std::vector<RefPair> read_pairs(const std::filesystem::path& path);

}  // namespace isacl

#endif  // ISACL_TRIPLETS_HPP_
