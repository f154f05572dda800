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
#include <span>
#include <vector>

#include "advasv/features.hpp"

namespace advasv::synth {

// A synthetic speaker: every frame is the spectral template plus a
// per-channel sinusoidal modulation with a speaker-specific period.
struct SpeakerSpec {
  std::uint32_t id = 0;
  std::vector<double> spectral_template;
  std::vector<double> modulation;
  double rate = 16.0;  // frames per modulation cycle
};

struct Utterance {
  std::uint32_t speaker_id = 0;
  FeatureMatrix features;
  std::uint64_t seed = 0;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

enum class TrialLabel : std::uint8_t { kNontarget = 0, kTarget = 1 };

// Indices refer to a pool of utterances held by the caller.
struct Trial {
  std::size_t enroll = 0;
  std::size_t test = 0;
  TrialLabel label = TrialLabel::kNontarget;

  friend bool operator==(const Trial&, const Trial&) = default;
};

struct TrialSet {
  std::vector<Trial> trials;

  std::size_t size() const { return trials.size(); }
  std::size_t CountTargets() const;

  friend bool operator==(const TrialSet&, const TrialSet&) = default;
};

// Templates ~ N(0, 1) per channel, modulation ~ 0.3 |N(0, 1)|, rate ~ U[8, 32].
// Each speaker draws from its own stream derived from (seed, index).
std::vector<SpeakerSpec> MakeSpeakers(std::size_t n_speakers, std::uint64_t seed,
                                      std::size_t channels = 24);

// features[t, c] = template[c] + modulation[c] sin(2 pi t / rate + phase)
//                  + N(0, noise_sigma^2), with phase ~ U[0, 2 pi) from `seed`.
Utterance SynthUtterance(const SpeakerSpec& speaker, std::size_t frames,
                         double noise_sigma, std::uint64_t seed);

// Samples target (same speaker) and nontarget pairs without replacement.
// Enroll/test orientation of each pair is a seeded coin flip and the final
// list is shuffled.
TrialSet MakeTrials(std::span<const Utterance> utterances, std::size_t n_target,
                    std::size_t n_nontarget, std::uint64_t seed);

// Global (scalar) standardization fitted on one split and applied to all.
struct Standardizer {
  double mean = 0.0;
  double stddev = 1.0;

  static Standardizer Fit(std::span<const Utterance> utterances);
  void Apply(std::span<Utterance> utterances) const;
};

struct CorpusConfig {
  std::size_t n_speakers = 20;
  std::size_t train_utts_per_speaker = 10;
  std::size_t eval_utts_per_speaker = 10;
  std::size_t frames = 96;
  std::size_t channels = 24;
  double noise_sigma = 1.5;
  std::uint64_t seed = 1;
};

struct Corpus {
  std::vector<SpeakerSpec> speakers;
  // Training split (ASV and purifier training) and held-out split (trials).
  std::vector<Utterance> train;
  std::vector<Utterance> eval;
  Standardizer standardizer;
};

// Pure function of the config. Both splits are standardized with statistics
// fitted on the training split.
Corpus GenerateCorpus(const CorpusConfig& config);

// Mean Euclidean distance between utterance-mean feature vectors, over pairs
// of the same speaker (first) and of different speakers (second).
std::pair<double, double> IntraInterDistances(std::span<const Utterance> utterances);

// On-disk dataset.
//
// Layout (little-endian):
//   "ADVASVDS" | version u8 | flags u8 | config_hash u64 | count u64 |
//   count x (speaker_id u32 | T u32 | C u32 | f64[T*C]) |
//   CRC32 u32 over everything between the magic and the checksum
struct Dataset {
  static constexpr char kMagic[] = "ADVASVDS";
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::uint8_t kFlagAdversarial = 0x01;
  // Set on adversarial sets crafted through a substitute purifier.
  static constexpr std::uint8_t kFlagAwareThreat = 0x02;

  std::uint8_t flags = 0;
  std::uint64_t config_hash = 0;
  std::vector<Utterance> utterances;

  bool adversarial() const { return flags & kFlagAdversarial; }

  std::vector<std::uint8_t> Encode() const;
  static Dataset Decode(std::span<const std::uint8_t> bytes);

  // Utterance seeds are not serialized and do not take part in equality.
  friend bool operator==(const Dataset& a, const Dataset& b);
};

void SaveDataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset LoadDataset(const std::filesystem::path& path);

// Trial list as text: a header line "# advasv-trials config_hash=<16 hex>"
// followed by "<enroll> <test> target|nontarget" per line.
void SaveTrials(const std::filesystem::path& path, const TrialSet& trials,
                std::uint64_t config_hash);
TrialSet LoadTrials(const std::filesystem::path& path, std::uint64_t* config_hash);

}  // namespace advasv::synth
