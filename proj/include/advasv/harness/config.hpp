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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "advasv/asv.hpp"
#include "advasv/attack.hpp"
#include "advasv/filters.hpp"
#include "advasv/recon.hpp"
#include "advasv/synthdata.hpp"

namespace advasv::harness {

// `key = value` lines, `#` comments, dotted section prefixes.
class ConfigFile {
 public:
  static ConfigFile Parse(const std::string& text);
  static ConfigFile Load(const std::filesystem::path& path);

  bool Has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& Get(const std::string& key) const;
  void Set(const std::string& key, std::string value);
  const std::map<std::string, std::string>& values() const { return values_; }

  // Sorted `key=value` lines with trimmed whitespace.
  std::string Canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t Fnv1a64(const std::string& text);

struct ExperimentConfig {
  synth::CorpusConfig corpus;
  std::size_t n_target = 500;
  std::size_t n_nontarget = 500;

  asv::EmbeddingConfig asv_net;
  asv::TrainConfig asv_train;

  recon::ReconConfig recon_net;
  recon::PretrainConfig recon_train;

  attack::AttackConfig attack;

  std::vector<std::size_t> k_list = {0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<std::size_t> aware_k_list = {0, 1, 2, 3};
  std::vector<filters::FilterSpec> filters = {
      {filters::FilterKind::kGaussian, 3, 1.0},
      {filters::FilterKind::kMedian, 3, 1.0},
      {filters::FilterKind::kMean, 3, 1.0},
  };
  bool purify_enroll = false;

  std::uint64_t seed = 1;

  static ExperimentConfig FromFile(const ConfigFile& file);
  // Every key with its effective value, defaults included.
  ConfigFile ToFile() const;
  void Validate() const;
  // Hash of the canonical effective configuration.
  std::uint64_t Hash() const;

  // Seeds of the individual pipeline stages, all derived from `seed`.
  std::uint64_t CorpusSeed() const { return seed; }
  std::uint64_t TrialSeed() const;
  std::uint64_t AsvSeed() const;
  // Recon model `index` derives from seed + index.
  std::uint64_t ReconSeed(std::size_t index) const;
};

std::string HashHex(std::uint64_t hash);

}  // namespace advasv::harness
