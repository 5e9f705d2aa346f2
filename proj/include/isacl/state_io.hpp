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

// Internal-state files ("ISST"): one pooled hidden-state vector per record,
// all produced by a single (model, layer, pooling) configuration.
//
// Layout, all integers little-endian:
//
//   "ISST" | u32 version | u16 model_id_len | model_id
//   | i32 layer_index | u8 pooling | u32 dim | u64 count
//   | count x ( u16 id_len | id | u8 label | dim x f32 )

#ifndef ISACL_STATE_IO_HPP_
#define ISACL_STATE_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace isacl {

enum class Pooling : std::uint8_t {
  kMeanAllTokens = 0,
  kLastToken = 1,
};

// On-disk label byte. Leak is 0 and NonDisclosure is 1 on disk; the
// in-memory training label is inverted (leak = 1), see labeler.hpp.
enum class StateLabel : std::uint8_t {
  kLeak = 0,
  kNonDisclosure = 1,
  kUnlabeled = 255,
};

inline constexpr char kStateMagic[4] = {'I', 'S', 'S', 'T'};
inline constexpr std::uint32_t kStateFormatVersion = 1;

struct StateFileHeader {
  std::uint32_t version = kStateFormatVersion;
  std::string model_id;
  std::int32_t layer_index = -1;  // -1 is the last layer
  Pooling pooling = Pooling::kMeanAllTokens;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;

  friend bool operator==(const StateFileHeader&,
                         const StateFileHeader&) = default;
};

struct StateRecord {
  std::string id;
  StateLabel label = StateLabel::kUnlabeled;
  std::vector<float> vector;

  friend bool operator==(const StateRecord&, const StateRecord&) = default;
};

struct StateFile {
  StateFileHeader header;
  std::vector<StateRecord> records;

  // Index of the record with the given id, if present. Linear scan.
  std::optional<std::size_t> find(std::string_view id) const;

  friend bool operator==(const StateFile&, const StateFile&) = default;
};

std::string_view pooling_name(Pooling p);
Pooling parse_pooling(std::string_view name);

// Serializes to the exact on-disk byte layout. Throws DimensionError when a
// record length differs from header.dim, DataError on non-finite payloads or
// when header.count disagrees with records.size().
std::string encode_state_file(const StateFileHeader& header,
                              std::span<const StateRecord> records);

StateFile decode_state_file(std::string_view bytes);

void write_state_file(const StateFileHeader& header,
                      std::span<const StateRecord> records,
                      const std::filesystem::path& path);

StateFile read_state_file(const std::filesystem::path& path);

// Size in bytes of the encoded file, computed from the header and id lengths
// alone.
std::size_t state_file_size(const StateFileHeader& header,
                            std::span<const StateRecord> records);

}  // namespace isacl

#endif  // ISACL_STATE_IO_HPP_
