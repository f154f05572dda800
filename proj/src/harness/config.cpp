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

#include "advasv/harness/config.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <functional>
#include <sstream>

#include "advasv/binary_io.hpp"
#include "advasv/error.hpp"
#include "advasv/rng.hpp"

namespace advasv::harness {

namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(Trim(item));
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double ParseDouble(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("config: " + key + " = '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t ParseUint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("config: " + key + " = '" + v + "' is not a non-negative integer");
  }
  return out;
}

std::string FormatSizeList(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<std::size_t> ParseSizeList(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  if (Trim(v).empty()) return out;
  for (const auto& item : Split(v, ',')) out.push_back(ParseUint(key, item));
  return out;
}

std::string FormatFilter(const filters::FilterSpec& f) {
  std::string out = filters::ToString(f.kind) + ":" + std::to_string(f.window);
  if (f.kind == filters::FilterKind::kGaussian) out += ":" + FormatDouble(f.sigma);
  return out;
}

filters::FilterSpec ParseFilter(const std::string& key, const std::string& v) {
  const auto parts = Split(v, ':');
  if (parts.size() < 2 || parts.size() > 3) {
    throw ValidationError("config: " + key + " entry '" + v +
                          "' must look like kind:window[:sigma]");
  }
  filters::FilterSpec f;
  f.kind = filters::ParseFilterKind(parts[0]);
  f.window = ParseUint(key, parts[1]);
  if (parts.size() == 3) f.sigma = ParseDouble(key, parts[2]);
  return f;
}

// One entry per config key: how to read it into and write it out of an
// ExperimentConfig.
struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename M>
Field SizeField(const char* key, M member) {
  return {key,
          [=](ExperimentConfig& c, const std::string& v) {
            member(c) = static_cast<std::size_t>(ParseUint(key, v));
          },
          [=](const ExperimentConfig& c) {
            return std::to_string(member(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename M>
Field RealField(const char* key, M member) {
  return {key,
          [=](ExperimentConfig& c, const std::string& v) { member(c) = ParseDouble(key, v); },
          [=](const ExperimentConfig& c) {
            return FormatDouble(member(const_cast<ExperimentConfig&>(c)));
          }};
}

const std::vector<Field>& Fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> fields = {
      SizeField("corpus.speakers", [](C& c) -> std::size_t& { return c.corpus.n_speakers; }),
      SizeField("corpus.train_utts",
                [](C& c) -> std::size_t& { return c.corpus.train_utts_per_speaker; }),
      SizeField("corpus.eval_utts",
                [](C& c) -> std::size_t& { return c.corpus.eval_utts_per_speaker; }),
      SizeField("corpus.frames", [](C& c) -> std::size_t& { return c.corpus.frames; }),
      SizeField("corpus.channels", [](C& c) -> std::size_t& { return c.corpus.channels; }),
      RealField("corpus.noise_sigma", [](C& c) -> double& { return c.corpus.noise_sigma; }),
      SizeField("trials.target", [](C& c) -> std::size_t& { return c.n_target; }),
      SizeField("trials.nontarget", [](C& c) -> std::size_t& { return c.n_nontarget; }),

      SizeField("asv.hidden", [](C& c) -> std::size_t& { return c.asv_net.hidden; }),
      SizeField("asv.embedding", [](C& c) -> std::size_t& { return c.asv_net.embedding; }),
      SizeField("asv.epochs", [](C& c) -> std::size_t& { return c.asv_train.epochs; }),
      SizeField("asv.batch", [](C& c) -> std::size_t& { return c.asv_train.batch_size; }),
      RealField("asv.lr", [](C& c) -> double& { return c.asv_train.peak_lr; }),
      RealField("asv.warmup", [](C& c) -> double& { return c.asv_train.warmup_fraction; }),
      RealField("asv.margin", [](C& c) -> double& { return c.asv_train.margin; }),
      RealField("asv.scale", [](C& c) -> double& { return c.asv_train.scale; }),

      SizeField("recon.d_model", [](C& c) -> std::size_t& { return c.recon_net.d_model; }),
      SizeField("recon.heads", [](C& c) -> std::size_t& { return c.recon_net.heads; }),
      SizeField("recon.layers", [](C& c) -> std::size_t& { return c.recon_net.layers; }),
      SizeField("recon.ffn", [](C& c) -> std::size_t& { return c.recon_net.ffn; }),
      SizeField("recon.steps", [](C& c) -> std::size_t& { return c.recon_train.steps; }),
      SizeField("recon.batch", [](C& c) -> std::size_t& { return c.recon_train.batch_size; }),
      SizeField("recon.crop", [](C& c) -> std::size_t& { return c.recon_train.crop_frames; }),
      RealField("recon.lr", [](C& c) -> double& { return c.recon_train.peak_lr; }),
      RealField("recon.warmup", [](C& c) -> double& { return c.recon_train.warmup_fraction; }),
      SizeField("recon.time_width",
                [](C& c) -> std::size_t& { return c.recon_train.policy.time_width; }),
      SizeField("recon.channel_width",
                [](C& c) -> std::size_t& { return c.recon_train.policy.channel_width; }),
      RealField("recon.magnitude_prob",
                [](C& c) -> double& { return c.recon_train.policy.magnitude_prob; }),
      RealField("recon.time_start_prob",
                [](C& c) -> double& { return c.recon_train.policy.time_start_prob; }),
      RealField("recon.channel_block_prob",
                [](C& c) -> double& { return c.recon_train.policy.channel_block_prob; }),

      RealField("attack.epsilon", [](C& c) -> double& { return c.attack.epsilon; }),
      SizeField("attack.iterations", [](C& c) -> std::size_t& { return c.attack.iterations; }),
      RealField("attack.alpha", [](C& c) -> double& { return c.attack.alpha; }),

      {"defense.k_list",
       [](C& c, const std::string& v) { c.k_list = ParseSizeList("defense.k_list", v); },
       [](const C& c) { return FormatSizeList(c.k_list); }},
      {"defense.aware_k_list",
       [](C& c, const std::string& v) {
         c.aware_k_list = ParseSizeList("defense.aware_k_list", v);
       },
       [](const C& c) { return FormatSizeList(c.aware_k_list); }},
      {"defense.filters",
       [](C& c, const std::string& v) {
         c.filters.clear();
         if (Trim(v).empty()) return;
         for (const auto& item : Split(v, ',')) c.filters.push_back(ParseFilter("defense.filters", item));
       },
       [](const C& c) {
         std::string out;
         for (std::size_t i = 0; i < c.filters.size(); ++i) {
           out += (i ? "," : "") + FormatFilter(c.filters[i]);
         }
         return out;
       }},
      {"defense.purify_enroll",
       [](C& c, const std::string& v) {
         if (v == "true" || v == "1") {
           c.purify_enroll = true;
         } else if (v == "false" || v == "0") {
           c.purify_enroll = false;
         } else {
           throw ValidationError("config: defense.purify_enroll must be true or false");
         }
       },
       [](const C& c) { return std::string(c.purify_enroll ? "true" : "false"); }},

      {"run.seed", [](C& c, const std::string& v) { c.seed = ParseUint("run.seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
  };
  return fields;
}

}  // namespace

ConfigFile ConfigFile::Parse(const std::string& text) {
  ConfigFile file;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    }
    if (file.Has(key)) {
      throw ValidationError("config line " + std::to_string(lineno) + ": duplicate key " + key);
    }
    file.values_[key] = Trim(line.substr(eq + 1));
  }
  return file;
}

ConfigFile ConfigFile::Load(const std::filesystem::path& path) {
  const auto bytes = io::ReadFile(path);
  return Parse(std::string(bytes.begin(), bytes.end()));
}

const std::string& ConfigFile::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("config: missing key " + key);
  return it->second;
}

void ConfigFile::Set(const std::string& key, std::string value) {
  values_[Trim(key)] = Trim(value);
}

std::string ConfigFile::Canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t Fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HashHex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
  return buf;
}

ExperimentConfig ExperimentConfig::FromFile(const ConfigFile& file) {
  ExperimentConfig c;
  for (const auto& [key, value] : file.values()) {
    const Field* field = nullptr;
    for (const Field& f : Fields()) {
      if (key == f.key) field = &f;
    }
    if (field == nullptr) throw ValidationError("config: unknown key " + key);
    field->set(c, value);
  }
  c.asv_net.channels = c.corpus.channels;
  c.asv_net.n_speakers = c.corpus.n_speakers;
  c.recon_net.channels = c.corpus.channels;
  c.Validate();
  return c;
}

ConfigFile ExperimentConfig::ToFile() const {
  ConfigFile file;
  for (const Field& f : Fields()) file.Set(f.key, f.get(*this));
  return file;
}

void ExperimentConfig::Validate() const {
  if (corpus.n_speakers < 2) throw ValidationError("config: corpus.speakers must be >= 2");
  if (corpus.train_utts_per_speaker < 1 || corpus.eval_utts_per_speaker < 2) {
    throw ValidationError("config: need >= 1 train and >= 2 eval utterances per speaker");
  }
  if (!(corpus.noise_sigma >= 0.0)) throw ValidationError("config: corpus.noise_sigma must be >= 0");
  if (n_target + n_nontarget == 0) throw ValidationError("config: no trials requested");
  if (asv_net.channels != corpus.channels || recon_net.channels != corpus.channels) {
    throw ValidationError("config: channel count must agree across modules");
  }
  recon_net.Validate();
  recon_train.policy.Validate();
  if (recon_train.crop_frames > corpus.frames) {
    throw ValidationError("config: recon.crop exceeds corpus.frames");
  }
  if (corpus.frames < recon_train.policy.time_width ||
      corpus.channels < recon_train.policy.channel_width) {
    throw ValidationError("config: alteration block does not fit the feature matrix");
  }
  attack.Validate();
  if (k_list.empty()) throw ValidationError("config: defense.k_list must not be empty");
  if (aware_k_list.empty()) throw ValidationError("config: defense.aware_k_list must not be empty");
  for (const auto& f : filters) f.Validate();
}

std::uint64_t ExperimentConfig::Hash() const { return Fnv1a64(ToFile().Canonical()); }

std::uint64_t ExperimentConfig::TrialSeed() const { return DeriveSeed(seed, 0x545249414c53ULL); }

std::uint64_t ExperimentConfig::AsvSeed() const { return DeriveSeed(seed, 0x415356ULL); }

std::uint64_t ExperimentConfig::ReconSeed(std::size_t index) const {
  return DeriveSeed(seed + index, 0x5245434f4eULL);
}

}  // namespace advasv::harness
