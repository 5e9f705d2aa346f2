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

#include "isacl/byte_io.hpp"

#include <fstream>
#include <iterator>
#include <system_error>

#include "isacl/error.hpp"

namespace isacl {

void ByteReader::require(std::size_t n, std::string_view what) const {
  if (n > data_.size() - pos_) {
    throw DataError("truncated input while reading " + std::string(what) +
                    " at byte offset " + std::to_string(pos_) + " (need " +
                    std::to_string(n) + " bytes, have " +
                    std::to_string(data_.size() - pos_) + ")");
  }
}

std::uint64_t ByteReader::get_le(int width, std::string_view what) {
  require(static_cast<std::size_t>(width), what);
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i]))
         << (8 * i);
  }
  pos_ += static_cast<std::size_t>(width);
  return v;
}

std::uint8_t ByteReader::get_u8(std::string_view what) {
  return static_cast<std::uint8_t>(get_le(1, what));
}
std::uint16_t ByteReader::get_u16(std::string_view what) {
  return static_cast<std::uint16_t>(get_le(2, what));
}
std::uint32_t ByteReader::get_u32(std::string_view what) {
  return static_cast<std::uint32_t>(get_le(4, what));
}
std::uint64_t ByteReader::get_u64(std::string_view what) {
  return get_le(8, what);
}
std::int32_t ByteReader::get_i32(std::string_view what) {
  return static_cast<std::int32_t>(get_u32(what));
}
float ByteReader::get_f32(std::string_view what) {
  return std::bit_cast<float>(get_u32(what));
}

std::string_view ByteReader::get_bytes(std::size_t n, std::string_view what) {
  require(n, what);
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::get_f32s(std::span<float> out, std::string_view what) {
  require(out.size() * 4, what);
  for (float& v : out) v = get_f32(what);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return data;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

}  // namespace isacl
