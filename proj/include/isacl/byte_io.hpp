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

// Little-endian byte encoding shared by every binary file the library writes.
// Values are assembled byte by byte so the layout does not depend on host
// endianness.

#ifndef ISACL_BYTE_IO_HPP_
#define ISACL_BYTE_IO_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace isacl {

class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void put_u16(std::uint16_t v) { put_le(v, 2); }
  void put_u32(std::uint32_t v) { put_le(v, 4); }
  void put_u64(std::uint64_t v) { put_le(v, 8); }
  void put_i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v), 4); }
  void put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }
  void put_bytes(std::string_view bytes) { buf_.append(bytes); }
  void put_f32s(std::span<const float> values) {
    for (float v : values) put_f32(v);
  }

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
  }

  std::string buf_;
};

// Bounds-checked cursor over an in-memory byte buffer. Reads past the end
// throw DataError with the caller-supplied context string.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t get_u8(std::string_view what);
  std::uint16_t get_u16(std::string_view what);
  std::uint32_t get_u32(std::string_view what);
  std::uint64_t get_u64(std::string_view what);
  std::int32_t get_i32(std::string_view what);
  float get_f32(std::string_view what);
  std::string_view get_bytes(std::size_t n, std::string_view what);
  void get_f32s(std::span<float> out, std::string_view what);

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::uint64_t get_le(int width, std::string_view what);
  void require(std::size_t n, std::string_view what) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

// 64-bit FNV-1a, used as the trailing integrity checksum of database and
// model files.
std::uint64_t fnv1a64(std::string_view bytes);

std::string read_file_bytes(const std::filesystem::path& path);

// Writes via a sibling temporary file and renames into place.
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace isacl

#endif  // ISACL_BYTE_IO_HPP_
