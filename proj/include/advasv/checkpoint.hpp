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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advasv/numcore/tensor.hpp"

namespace advasv {

struct NamedTensor {
  std::string name;
  numcore::Tensor tensor;
};

// Serialized model parameters shared by the ASV and reconstruction nets.
//
// Layout (little-endian):
//   "ADVASVCK" | version u8 | config_hash u64 | count u32 |
//   count x (name_len u16 | name | rank u8 | dims u32[rank] | f64[prod(dims)]) |
//   CRC32 u32 over everything between the magic and the checksum
struct Checkpoint {
  static constexpr char kMagic[] = "ADVASVCK";
  static constexpr std::uint8_t kVersion = 1;

  std::uint64_t config_hash = 0;
  std::vector<NamedTensor> tensors;

  const numcore::Tensor& Get(const std::string& name) const;
  bool Has(const std::string& name) const;
  void Add(std::string name, numcore::Tensor t);

  std::vector<std::uint8_t> Encode() const;
  static Checkpoint Decode(const std::vector<std::uint8_t>& bytes);

  void Save(const std::filesystem::path& path) const;
  static Checkpoint Load(const std::filesystem::path& path);

  friend bool operator==(const Checkpoint& a, const Checkpoint& b);
};

}  // namespace advasv
