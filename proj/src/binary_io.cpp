// Copyright 2026  The advasv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "advasv/binary_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "advasv/error.hpp"

namespace advasv::io {

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  const std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

void ByteWriter::U16(std::uint16_t v) {
  for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
void ByteWriter::Bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
void ByteWriter::F64Array(std::span<const double> values) {
  buf_.reserve(buf_.size() + 8 * values.size());
  for (double v : values) F64(v);
}

void ByteReader::Need(std::size_t n) const {
  if (bytes_.size() - offset_ < n) {
    throw FormatError("unexpected end of data: need " + std::to_string(n) +
                          " bytes, " + std::to_string(bytes_.size() - offset_) +
                          " left",
                      offset_);
  }
}

std::uint8_t ByteReader::U8() {
  Need(1);
  return bytes_[offset_++];
}
std::uint16_t ByteReader::U16() {
  Need(2);
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(bytes_[offset_++]) << (8 * i);
  return v;
}
std::uint32_t ByteReader::U32() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[offset_++]) << (8 * i);
  return v;
}
std::uint64_t ByteReader::U64() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_++]) << (8 * i);
  return v;
}
double ByteReader::F64() { return std::bit_cast<double>(U64()); }
std::string ByteReader::Bytes(std::size_t n) {
  Need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), n);
  offset_ += n;
  return s;
}
void ByteReader::F64Array(std::span<double> out) {
  Need(8 * out.size());
  for (double& v : out) v = F64();
}

std::vector<std::uint8_t> Frame(std::string_view magic,
                                std::span<const std::uint8_t> body) {
  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  out.insert(out.end(), body.begin(), body.end());
  const std::uint32_t crc = Crc32(body);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return out;
}

std::span<const std::uint8_t> Unframe(std::string_view magic,
                                      std::span<const std::uint8_t> file) {
  if (file.size() < magic.size() + 4) {
    throw FormatError("file too short (" + std::to_string(file.size()) + " bytes)",
                      file.size());
  }
  if (!std::equal(magic.begin(), magic.end(), file.begin())) {
    throw FormatError("bad magic, expected \"" + std::string(magic) + "\"", 0);
  }
  const auto body = file.subspan(magic.size(), file.size() - magic.size() - 4);
  ByteReader tail(file.subspan(file.size() - 4));
  const std::uint32_t stored = tail.U32();
  const std::uint32_t actual = Crc32(body);
  if (stored != actual) {
    throw FormatError("checksum mismatch", file.size() - 4);
  }
  return body;
}

void WriteFile(const std::filesystem::path& path,
               std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace advasv::io
