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

#include "isacl/state_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isacl/byte_io.hpp"
#include "isacl/error.hpp"

namespace isacl {
namespace {

constexpr std::size_t kFixedHeaderBytes = 4 + 4 + 2 + 4 + 1 + 4 + 8;

void check_header(const StateFileHeader& header) {
  if (header.version != kStateFormatVersion) {
    throw DataError("unsupported state file version " +
                    std::to_string(header.version));
  }
  if (header.dim == 0) throw DataError("state file dim must be >= 1");
  if (header.model_id.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw DataError("model_id longer than 65535 bytes");
  }
}

bool valid_label(std::uint8_t b) {
  return b == static_cast<std::uint8_t>(StateLabel::kLeak) ||
         b == static_cast<std::uint8_t>(StateLabel::kNonDisclosure) ||
         b == static_cast<std::uint8_t>(StateLabel::kUnlabeled);
}

}  // namespace

std::optional<std::size_t> StateFile::find(std::string_view id) const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id == id) return i;
  }
  return std::nullopt;
}

std::string_view pooling_name(Pooling p) {
  return p == Pooling::kMeanAllTokens ? "mean" : "last";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "mean" || name == "MeanAllTokens") return Pooling::kMeanAllTokens;
  if (name == "last" || name == "LastToken") return Pooling::kLastToken;
  throw InvalidArgument("unknown pooling mode '" + std::string(name) +
                        "' (expected mean or last)");
}

std::size_t state_file_size(const StateFileHeader& header,
                            std::span<const StateRecord> records) {
  std::size_t size = kFixedHeaderBytes + header.model_id.size();
  for (const auto& r : records) {
    size += 2 + r.id.size() + 1 + 4 * static_cast<std::size_t>(header.dim);
  }
  return size;
}

std::string encode_state_file(const StateFileHeader& header,
                              std::span<const StateRecord> records) {
  check_header(header);
  if (header.count != records.size()) {
    throw DataError("header count " + std::to_string(header.count) +
                    " does not match " + std::to_string(records.size()) +
                    " records");
  }
  ByteWriter w;
  w.put_bytes(std::string_view(kStateMagic, 4));
  w.put_u32(header.version);
  w.put_u16(static_cast<std::uint16_t>(header.model_id.size()));
  w.put_bytes(header.model_id);
  w.put_i32(header.layer_index);
  w.put_u8(static_cast<std::uint8_t>(header.pooling));
  w.put_u32(header.dim);
  w.put_u64(header.count);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.vector.size() != header.dim) {
      throw DimensionError("record " + std::to_string(i) + " ('" + r.id +
                           "') has length " + std::to_string(r.vector.size()) +
                           ", header dim is " + std::to_string(header.dim));
    }
    if (r.id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw DataError("record id longer than 65535 bytes at record " +
                      std::to_string(i));
    }
    for (float v : r.vector) {
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in record " + std::to_string(i) +
                        " ('" + r.id + "')");
      }
    }
    w.put_u16(static_cast<std::uint16_t>(r.id.size()));
    w.put_bytes(r.id);
    w.put_u8(static_cast<std::uint8_t>(r.label));
    w.put_f32s(r.vector);
  }
  return w.take();
}

StateFile decode_state_file(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.get_bytes(4, "magic") != std::string_view(kStateMagic, 4)) {
    throw DataError("bad magic: not an ISST state file");
  }
  StateFile file;
  auto& h = file.header;
  h.version = in.get_u32("version");
  if (h.version != kStateFormatVersion) {
    throw DataError("unsupported state file version " +
                    std::to_string(h.version));
  }
  auto id_len = in.get_u16("model_id length");
  h.model_id = std::string(in.get_bytes(id_len, "model_id"));
  h.layer_index = in.get_i32("layer_index");
  auto pooling = in.get_u8("pooling_mode");
  if (pooling > 1) {
    throw DataError("invalid pooling mode byte " + std::to_string(pooling));
  }
  h.pooling = static_cast<Pooling>(pooling);
  h.dim = in.get_u32("dim");
  if (h.dim == 0) throw DataError("state file dim must be >= 1");
  h.count = in.get_u64("count");

  // Every record needs at least 3 + 4*dim bytes; cap the reservation so a
  // corrupt count cannot trigger a huge allocation.
  const std::size_t min_record = 3 + 4 * static_cast<std::size_t>(h.dim);
  file.records.reserve(static_cast<std::size_t>(
      std::min<std::uint64_t>(h.count, in.remaining() / min_record)));
  for (std::uint64_t i = 0; i < h.count; ++i) {
    const std::string ctx = "record " + std::to_string(i);
    StateRecord r;
    auto len = in.get_u16(ctx);
    r.id = std::string(in.get_bytes(len, ctx));
    auto label = in.get_u8(ctx);
    if (!valid_label(label)) {
      throw DataError("invalid label byte " + std::to_string(label) + " in " +
                      ctx);
    }
    r.label = static_cast<StateLabel>(label);
    r.vector.resize(h.dim);
    in.get_f32s(r.vector, ctx);
    for (float v : r.vector) {
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in " + ctx + " ('" + r.id + "')");
      }
    }
    file.records.push_back(std::move(r));
  }
  if (!in.at_end()) {
    throw DataError("trailing " + std::to_string(in.remaining()) +
                    " bytes after last record");
  }
  return file;
}

void write_state_file(const StateFileHeader& header,
                      std::span<const StateRecord> records,
                      const std::filesystem::path& path) {
  write_file_bytes(path, encode_state_file(header, records));
}

StateFile read_state_file(const std::filesystem::path& path) {
  try {
    return decode_state_file(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace isacl
