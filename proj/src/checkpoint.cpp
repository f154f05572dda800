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

#include "advasv/checkpoint.hpp"

#include <algorithm>
#include <limits>

#include "advasv/binary_io.hpp"
#include "advasv/error.hpp"

namespace advasv {

const numcore::Tensor& Checkpoint::Get(const std::string& name) const {
  for (const auto& nt : tensors) {
    if (nt.name == name) return nt.tensor;
  }
  throw ValidationError("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::Has(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(),
                     [&](const NamedTensor& nt) { return nt.name == name; });
}

void Checkpoint::Add(std::string name, numcore::Tensor t) {
  if (Has(name)) throw ValidationError("duplicate checkpoint tensor '" + name + "'");
  t.DropGrad();
  tensors.push_back({std::move(name), std::move(t)});
}

std::vector<std::uint8_t> Checkpoint::Encode() const {
  io::ByteWriter w;
  w.U8(kVersion);
  w.U64(config_hash);
  w.U32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    if (nt.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError("tensor name too long: " + nt.name.substr(0, 32));
    }
    w.U16(static_cast<std::uint16_t>(nt.name.size()));
    w.Bytes(nt.name);
    w.U8(static_cast<std::uint8_t>(nt.tensor.rank()));
    for (std::size_t d : nt.tensor.shape()) w.U32(static_cast<std::uint32_t>(d));
    w.F64Array(nt.tensor.values());
  }
  return io::Frame(std::string_view(kMagic, 8), w.bytes());
}

Checkpoint Checkpoint::Decode(const std::vector<std::uint8_t>& bytes) {
  const auto body = io::Unframe(std::string_view(kMagic, 8), bytes);
  io::ByteReader r(body);
  auto fail = [&](const std::string& what) -> FormatError {
    return FormatError("checkpoint: " + what, 8 + r.offset());
  };
  Checkpoint ck;
  const std::uint8_t version = r.U8();
  if (version != kVersion) throw fail("unsupported version " + std::to_string(version));
  ck.config_hash = r.U64();
  const std::uint32_t count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.U16();
    std::string name = r.Bytes(name_len);
    const std::uint8_t rank = r.U8();
    numcore::Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.U32();
      if (d == 0) throw fail("zero dimension in tensor '" + name + "'");
      n *= d;
    }
    if (n > r.remaining() / 8) throw fail("tensor '" + name + "' exceeds file size");
    std::vector<double> values(n);
    r.F64Array(values);
    ck.tensors.push_back({std::move(name), numcore::Tensor(std::move(shape), std::move(values))});
  }
  if (r.remaining() != 0) throw fail("trailing bytes after last tensor");
  return ck;
}

void Checkpoint::Save(const std::filesystem::path& path) const {
  io::WriteFile(path, Encode());
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  return Decode(io::ReadFile(path));
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  if (a.config_hash != b.config_hash || a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    if (a.tensors[i].name != b.tensors[i].name ||
        !(a.tensors[i].tensor == b.tensors[i].tensor)) {
      return false;
    }
  }
  return true;
}

}  // namespace advasv
