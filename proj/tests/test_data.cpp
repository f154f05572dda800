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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "advasv/binary_io.hpp"
#include "advasv/checkpoint.hpp"
#include "advasv/error.hpp"
#include "advasv/rng.hpp"
#include "advasv/synthdata.hpp"

using namespace advasv;
using namespace advasv::synth;

namespace {

std::filesystem::path TempPath(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "advasv_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<Utterance> SmallPool(std::uint64_t seed) {
  const auto speakers = MakeSpeakers(4, seed, 6);
  std::vector<Utterance> pool;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    for (std::size_t u = 0; u < 3; ++u) {
      pool.push_back(SynthUtterance(speakers[s], 16, 0.5, DeriveSeed(seed, s, u)));
    }
  }
  return pool;
}

}  // namespace

TEST_CASE("crc32 check value") {
  const std::string s = "123456789";
  const std::vector<std::uint8_t> bytes(s.begin(), s.end());
  CHECK(io::Crc32(bytes) == 0xCBF43926u);
}

TEST_CASE("byte reader reports the offset of a short read") {
  io::ByteWriter w;
  w.U32(0xdeadbeef);
  w.F64(-1.5);
  io::ByteReader r(w.bytes());
  CHECK(r.U32() == 0xdeadbeefu);
  CHECK(r.F64() == -1.5);
  try {
    r.U8();
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 12);
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  Checkpoint ck;
  ck.config_hash = 0x0123456789abcdefULL;
  ck.Add("a", numcore::Tensor::Matrix({{1, 2}, {3, 4}}));
  ck.Add("b", numcore::Tensor::Vector({-0.25}));
  const auto bytes = ck.Encode();
  CHECK(Checkpoint::Decode(bytes) == ck);
  CHECK(Checkpoint::Decode(bytes).Get("a").at(1, 0) == 3.0);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  CHECK_THROWS_AS(Checkpoint::Decode(truncated), FormatError);

  for (std::size_t i = 8; i < bytes.size(); i += 7) {
    auto flipped = bytes;
    flipped[i] ^= 0x10;
    CHECK_THROWS_AS(Checkpoint::Decode(flipped), FormatError);
  }
  const auto path = TempPath("ck.bin");
  ck.Save(path);
  CHECK(Checkpoint::Load(path) == ck);
  CHECK_THROWS_AS(Checkpoint::Load(TempPath("missing.bin")), ValidationError);
}

TEST_CASE("speaker banks are deterministic and seed dependent") {
  CHECK_THROWS_AS(MakeSpeakers(1, 1), ValidationError);
  const auto a = MakeSpeakers(20, 5);
  const auto b = MakeSpeakers(20, 5);
  const auto c = MakeSpeakers(20, 6);
  REQUIRE(a.size() == 20);
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].spectral_template == b[i].spectral_template);
    CHECK(a[i].modulation == b[i].modulation);
    CHECK(a[i].rate == b[i].rate);
    CHECK(a[i].rate >= 8.0);
    CHECK(a[i].rate <= 32.0);
    for (double m : a[i].modulation) CHECK(m >= 0.0);
    differ = differ || a[i].spectral_template != c[i].spectral_template;
  }
  CHECK(differ);
}

TEST_CASE("mean pairwise template distance is near sqrt(2C)") {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spk = MakeSpeakers(20, seed, 24);
    for (std::size_t i = 0; i < spk.size(); ++i) {
      for (std::size_t j = i + 1; j < spk.size(); ++j) {
        double d = 0.0;
        for (std::size_t c = 0; c < 24; ++c) {
          const double e = spk[i].spectral_template[c] - spk[j].spectral_template[c];
          d += e * e;
        }
        total += std::sqrt(d);
        ++pairs;
      }
    }
  }
  const double expected = std::sqrt(2.0 * 24);
  CHECK(std::abs(total / pairs - expected) < 0.3 * expected);
}

TEST_CASE("degenerate generator reproduces the template") {
  SpeakerSpec s;
  s.spectral_template = {1.0, -2.0, 0.5};
  s.modulation = {0.0, 0.0, 0.0};
  const Utterance u = SynthUtterance(s, 16, 0.0, 9);
  for (std::size_t t = 0; t < 16; ++t) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(u.features(t, c) == s.spectral_template[c]);
  }
  CHECK_THROWS_AS(SynthUtterance(s, 15, 0.0, 9), ValidationError);
  CHECK_THROWS_AS(SynthUtterance(s, 16, -1.0, 9), ValidationError);
}

TEST_CASE("utterance frame means stay within a CLT band of the template") {
  const auto spk = MakeSpeakers(3, 11);
  const double sigma = 0.5;
  const std::size_t frames = 96;
  for (const auto& s : spk) {
    const Utterance u = SynthUtterance(s, frames, sigma, 4);
    CHECK(u == SynthUtterance(s, frames, sigma, 4));
    for (std::size_t c = 0; c < 24; ++c) {
      double mean = 0.0;
      for (std::size_t t = 0; t < frames; ++t) mean += u.features(t, c) / frames;
      // Modulation averages out over whole cycles only approximately.
      const double band = 3.0 * sigma / std::sqrt(double(frames)) + s.modulation[c] * 0.5;
      CHECK(std::abs(mean - s.spectral_template[c]) < band);
    }
  }
}

TEST_CASE("trial lists have correct labels and counts") {
  const auto pool = SmallPool(3);
  const TrialSet t = MakeTrials(pool, 6, 10, 1);
  CHECK(t.size() == 16);
  CHECK(t.CountTargets() == 6);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& tr : t.trials) {
    CHECK(tr.enroll != tr.test);
    const bool same = pool[tr.enroll].speaker_id == pool[tr.test].speaker_id;
    CHECK(same == (tr.label == TrialLabel::kTarget));
    const auto key = std::minmax(tr.enroll, tr.test);
    CHECK(seen.insert({key.first, key.second}).second);
  }
  CHECK(MakeTrials(pool, 6, 10, 1) == t);
  CHECK(MakeTrials(pool, 0, 5, 1).CountTargets() == 0);
  // 4 speakers x C(3,2) = 12 target pairs.
  CHECK_THROWS_AS(MakeTrials(pool, 13, 0, 1), ValidationError);
}

TEST_CASE("default corpus supports a 500/500 trial list reproducibly") {
  const Corpus corpus = GenerateCorpus({});
  const TrialSet a = MakeTrials(corpus.eval, 500, 500, 2);
  CHECK(a.CountTargets() == 500);
  CHECK(a.size() == 1000);
  CHECK(MakeTrials(corpus.eval, 500, 500, 2) == a);
}

TEST_CASE("corpus standardization and separability") {
  std::size_t separable = 0;
  const std::size_t runs = 20;
  for (std::uint64_t seed = 1; seed <= runs; ++seed) {
    CorpusConfig cfg;
    cfg.seed = seed;
    cfg.noise_sigma = 0.5;
    const Corpus corpus = GenerateCorpus(cfg);
    CHECK(corpus.train.size() == 200);
    CHECK(corpus.eval.size() == 200);
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (const auto& u : corpus.train) {
      for (double v : u.features.values()) {
        sum += v;
        sq += v * v;
        n += 1.0;
      }
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.1);
    const auto [intra, inter] = IntraInterDistances(corpus.eval);
    separable += intra < inter;
  }
  CHECK(separable >= 19);
  CorpusConfig cfg;
  CHECK(GenerateCorpus(cfg).eval == GenerateCorpus(cfg).eval);
}

TEST_CASE("dataset files round trip and reject corruption") {
  Dataset ds;
  ds.flags = Dataset::kFlagAdversarial;
  ds.config_hash = 42;
  ds.utterances = SmallPool(8);
  const auto path = TempPath("ds.bin");
  SaveDataset(path, ds);
  CHECK(LoadDataset(path) == ds);

  const auto bytes = ds.Encode();
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  CHECK_THROWS_AS(Dataset::Decode(truncated), FormatError);
  auto flipped = bytes;
  flipped[bytes.size() / 3] ^= 0x01;
  CHECK_THROWS_AS(Dataset::Decode(flipped), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(Dataset::Decode(bad_magic), FormatError);
}

TEST_CASE("trial text files round trip with their hash") {
  const auto pool = SmallPool(3);
  const TrialSet t = MakeTrials(pool, 4, 4, 7);
  const auto path = TempPath("trials.txt");
  SaveTrials(path, t, 0xfeedULL);
  std::uint64_t hash = 0;
  CHECK(LoadTrials(path, &hash) == t);
  CHECK(hash == 0xfeedULL);
}
