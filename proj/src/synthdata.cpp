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

#include "advasv/synthdata.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "advasv/binary_io.hpp"
#include "advasv/error.hpp"
#include "advasv/rng.hpp"

namespace advasv::synth {

namespace {

constexpr std::uint64_t kSpeakerStream = 0x5350454bULL;  // "SPEK"
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kEvalStream = 2;

std::vector<double> UtteranceMean(const Utterance& u) {
  const auto& f = u.features;
  std::vector<double> mean(f.channels(), 0.0);
  for (std::size_t t = 0; t < f.frames(); ++t)
    for (std::size_t c = 0; c < f.channels(); ++c) mean[c] += f(t, c);
  for (double& m : mean) m /= static_cast<double>(f.frames());
  return mean;
}

}  // namespace

std::size_t TrialSet::CountTargets() const {
  std::size_t n = 0;
  for (const Trial& t : trials) n += t.label == TrialLabel::kTarget;
  return n;
}

std::vector<SpeakerSpec> MakeSpeakers(std::size_t n_speakers, std::uint64_t seed,
                                      std::size_t channels) {
  if (n_speakers < 2) {
    throw ValidationError("make_speakers: need at least 2 speakers, got " +
                          std::to_string(n_speakers));
  }
  if (channels == 0) throw ValidationError("make_speakers: channels must be positive");
  std::vector<SpeakerSpec> speakers(n_speakers);
  for (std::size_t i = 0; i < n_speakers; ++i) {
    Rng rng(DeriveSeed(seed, i));
    SpeakerSpec& s = speakers[i];
    s.id = static_cast<std::uint32_t>(i);
    s.spectral_template.resize(channels);
    s.modulation.resize(channels);
    for (double& v : s.spectral_template) v = rng.Normal();
    for (double& v : s.modulation) v = 0.3 * std::abs(rng.Normal());
    s.rate = rng.Uniform(8.0, 32.0);
  }
  return speakers;
}

Utterance SynthUtterance(const SpeakerSpec& speaker, std::size_t frames,
                         double noise_sigma, std::uint64_t seed) {
  if (frames < 16) {
    throw ValidationError("synth_utterance: need at least 16 frames, got " +
                          std::to_string(frames));
  }
  if (!(noise_sigma >= 0.0)) {
    throw ValidationError("synth_utterance: noise_sigma must be >= 0");
  }
  const std::size_t channels = speaker.spectral_template.size();
  if (speaker.modulation.size() != channels) {
    throw ValidationError("synth_utterance: modulation/template size mismatch");
  }
  Rng rng(seed);
  const double phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  Utterance u;
  u.speaker_id = speaker.id;
  u.seed = seed;
  u.features = FeatureMatrix(frames, channels);
  for (std::size_t t = 0; t < frames; ++t) {
    const double wave =
        std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / speaker.rate + phase);
    for (std::size_t c = 0; c < channels; ++c) {
      double v = speaker.spectral_template[c] + speaker.modulation[c] * wave;
      if (noise_sigma > 0.0) v += noise_sigma * rng.Normal();
      u.features(t, c) = v;
    }
  }
  return u;
}

TrialSet MakeTrials(std::span<const Utterance> utterances, std::size_t n_target,
                    std::size_t n_nontarget, std::uint64_t seed) {
  std::vector<Trial> same, diff;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    for (std::size_t j = i + 1; j < utterances.size(); ++j) {
      const bool target = utterances[i].speaker_id == utterances[j].speaker_id;
      (target ? same : diff)
          .push_back({i, j, target ? TrialLabel::kTarget : TrialLabel::kNontarget});
    }
  }
  if (n_target > same.size() || n_nontarget > diff.size()) {
    throw ValidationError("make_trials: requested " + std::to_string(n_target) +
                          " target / " + std::to_string(n_nontarget) +
                          " nontarget trials but only " + std::to_string(same.size()) +
                          " / " + std::to_string(diff.size()) + " pairs exist");
  }
  Rng rng(seed);
  auto sample = [&rng](std::vector<Trial>& pool, std::size_t n, std::vector<Trial>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(pool[i], pool[i + rng.Below(pool.size() - i)]);
      Trial t = pool[i];
      if (rng.Bernoulli(0.5)) std::swap(t.enroll, t.test);
      out.push_back(t);
    }
  };
  TrialSet set;
  set.trials.reserve(n_target + n_nontarget);
  sample(same, n_target, set.trials);
  sample(diff, n_nontarget, set.trials);
  for (std::size_t i = set.trials.size(); i > 1; --i) {
    std::swap(set.trials[i - 1], set.trials[rng.Below(i)]);
  }
  return set;
}

Standardizer Standardizer::Fit(std::span<const Utterance> utterances) {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (const Utterance& u : utterances) {
    for (double v : u.features.values()) {
      sum += v;
      sum_sq += v * v;
    }
    n += u.features.size();
  }
  if (n == 0) throw ValidationError("standardizer: no data");
  Standardizer s;
  s.mean = sum / static_cast<double>(n);
  const double var = sum_sq / static_cast<double>(n) - s.mean * s.mean;
  s.stddev = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

void Standardizer::Apply(std::span<Utterance> utterances) const {
  const double inv = 1.0 / stddev;
  for (Utterance& u : utterances) {
    for (double& v : u.features.values()) v = (v - mean) * inv;
  }
}

Corpus GenerateCorpus(const CorpusConfig& config) {
  if (config.train_utts_per_speaker == 0) {
    throw ValidationError("corpus: train_utts_per_speaker must be positive");
  }
  Corpus corpus;
  corpus.speakers = MakeSpeakers(config.n_speakers,
                                 DeriveSeed(config.seed, kSpeakerStream),
                                 config.channels);
  auto split = [&](std::uint64_t stream, std::size_t per_speaker) {
    std::vector<Utterance> out;
    out.reserve(config.n_speakers * per_speaker);
    for (const SpeakerSpec& s : corpus.speakers) {
      for (std::size_t k = 0; k < per_speaker; ++k) {
        const std::uint64_t useed =
            DeriveSeed(DeriveSeed(config.seed, stream), s.id, k);
        out.push_back(SynthUtterance(s, config.frames, config.noise_sigma, useed));
      }
    }
    return out;
  };
  corpus.train = split(kTrainStream, config.train_utts_per_speaker);
  corpus.eval = split(kEvalStream, config.eval_utts_per_speaker);
  corpus.standardizer = Standardizer::Fit(corpus.train);
  corpus.standardizer.Apply(corpus.train);
  corpus.standardizer.Apply(corpus.eval);
  return corpus;
}

std::pair<double, double> IntraInterDistances(std::span<const Utterance> utterances) {
  std::vector<std::vector<double>> means;
  means.reserve(utterances.size());
  for (const Utterance& u : utterances) means.push_back(UtteranceMean(u));
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      double ss = 0.0;
      for (std::size_t c = 0; c < means[i].size(); ++c) {
        const double d = means[i][c] - means[j][c];
        ss += d * d;
      }
      if (utterances[i].speaker_id == utterances[j].speaker_id) {
        intra += std::sqrt(ss);
        ++n_intra;
      } else {
        inter += std::sqrt(ss);
        ++n_inter;
      }
    }
  }
  return {n_intra ? intra / n_intra : 0.0, n_inter ? inter / n_inter : 0.0};
}

std::vector<std::uint8_t> Dataset::Encode() const {
  io::ByteWriter w;
  w.U8(kVersion);
  w.U8(flags);
  w.U64(config_hash);
  w.U64(utterances.size());
  for (const Utterance& u : utterances) {
    w.U32(u.speaker_id);
    w.U32(static_cast<std::uint32_t>(u.features.frames()));
    w.U32(static_cast<std::uint32_t>(u.features.channels()));
    w.F64Array(u.features.values());
  }
  return io::Frame(std::string_view(kMagic, 8), w.bytes());
}

Dataset Dataset::Decode(std::span<const std::uint8_t> bytes) {
  const auto body = io::Unframe(std::string_view(kMagic, 8), bytes);
  io::ByteReader r(body);
  auto fail = [&](const std::string& what) {
    return FormatError("dataset: " + what, 8 + r.offset());
  };
  Dataset ds;
  const std::uint8_t version = r.U8();
  if (version != kVersion) throw fail("unsupported version " + std::to_string(version));
  ds.flags = r.U8();
  ds.config_hash = r.U64();
  const std::uint64_t count = r.U64();
  // Each record is at least 12 header bytes.
  if (count > r.remaining() / 12) throw fail("utterance count exceeds file size");
  ds.utterances.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Utterance u;
    u.speaker_id = r.U32();
    const std::size_t frames = r.U32();
    const std::size_t channels = r.U32();
    if (frames == 0 || channels == 0) throw fail("empty feature matrix");
    if (frames * channels > r.remaining() / 8) throw fail("record exceeds file size");
    std::vector<double> values(frames * channels);
    r.F64Array(values);
    u.features = FeatureMatrix(frames, channels, std::move(values));
    if (!u.features.AllFinite()) throw fail("non-finite feature value");
    ds.utterances.push_back(std::move(u));
  }
  if (r.remaining() != 0) throw fail("trailing bytes after last record");
  return ds;
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.flags != b.flags || a.config_hash != b.config_hash ||
      a.utterances.size() != b.utterances.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    if (a.utterances[i].speaker_id != b.utterances[i].speaker_id ||
        !(a.utterances[i].features == b.utterances[i].features)) {
      return false;
    }
  }
  return true;
}

void SaveDataset(const std::filesystem::path& path, const Dataset& dataset) {
  io::WriteFile(path, dataset.Encode());
}

Dataset LoadDataset(const std::filesystem::path& path) {
  return Dataset::Decode(io::ReadFile(path));
}

void SaveTrials(const std::filesystem::path& path, const TrialSet& trials,
                std::uint64_t config_hash) {
  std::ostringstream os;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, config_hash);
  os << "# advasv-trials config_hash=" << hex << '\n';
  for (const Trial& t : trials.trials) {
    os << t.enroll << ' ' << t.test << ' '
       << (t.label == TrialLabel::kTarget ? "target" : "nontarget") << '\n';
  }
  const std::string text = os.str();
  io::WriteFile(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                text.size()));
}

TrialSet LoadTrials(const std::filesystem::path& path, std::uint64_t* config_hash) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# advasv-trials config_hash=", 0) != 0) {
    throw ValidationError(path.string() + ": missing trial-list header");
  }
  const std::uint64_t hash = std::stoull(line.substr(line.find('=') + 1), nullptr, 16);
  if (config_hash) *config_hash = hash;
  TrialSet set;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Trial t;
    std::string label;
    if (!(ls >> t.enroll >> t.test >> label) ||
        (label != "target" && label != "nontarget")) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": malformed trial line");
    }
    t.label = label == "target" ? TrialLabel::kTarget : TrialLabel::kNontarget;
    set.trials.push_back(t);
  }
  return set;
}

}  // namespace advasv::synth
