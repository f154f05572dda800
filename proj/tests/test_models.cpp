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
#include <memory>

#include "advasv/asv.hpp"
#include "advasv/attack.hpp"
#include "advasv/error.hpp"
#include "advasv/filters.hpp"
#include "advasv/numcore/grad_check.hpp"
#include "advasv/numcore/ops.hpp"
#include "advasv/recon.hpp"
#include "advasv/rng.hpp"

using namespace advasv;
namespace nc = advasv::numcore;

namespace {

FeatureMatrix RandomFeatures(std::size_t t, std::size_t c, std::uint64_t seed,
                             double scale = 1.0) {
  Rng rng(seed);
  FeatureMatrix x(t, c);
  for (double& v : x.values()) v = scale * rng.Normal();
  return x;
}

synth::Corpus SmallCorpus() {
  synth::CorpusConfig cfg;
  cfg.n_speakers = 6;
  cfg.train_utts_per_speaker = 6;
  cfg.eval_utts_per_speaker = 6;
  cfg.frames = 32;
  cfg.channels = 12;
  cfg.seed = 5;
  return synth::GenerateCorpus(cfg);
}

asv::EmbeddingConfig SmallAsv() { return {.channels = 12, .hidden = 16, .embedding = 8, .n_speakers = 6}; }

recon::ReconConfig SmallRecon() {
  return {.channels = 12, .d_model = 8, .heads = 2, .layers = 1, .ffn = 16};
}

}  // namespace

TEST_CASE("embeddings are unit norm, deterministic and checked") {
  const asv::EmbeddingNet net({}, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FeatureMatrix x = RandomFeatures(20, 24, seed);
    const nc::Tensor e = net.Embed(x);
    double n = 0.0;
    for (double v : e.values()) n += v * v;
    CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-12);
    CHECK(net.Embed(x) == e);
  }
  CHECK_THROWS_AS(net.Embed(FeatureMatrix(20, 23)), ValidationError);
}

TEST_CASE("cosine scores are symmetric and bounded") {
  const asv::EmbeddingNet net({}, 4);
  const FeatureMatrix a = RandomFeatures(16, 24, 1), b = RandomFeatures(16, 24, 2);
  CHECK(asv::Score(net, a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(asv::Score(net, a, b) == asv::Score(net, b, a));
  CHECK(std::abs(asv::Score(net, a, b)) <= 1.0);
}

TEST_CASE("asv training is deterministic, reduces loss and separates speakers") {
  const synth::Corpus corpus = SmallCorpus();
  const asv::TrainConfig tc{.epochs = 8, .batch_size = 8};
  const auto r1 = asv::TrainAsv(corpus.train, SmallAsv(), tc, 9);
  const auto r2 = asv::TrainAsv(corpus.train, SmallAsv(), tc, 9);
  CHECK(r1.net == r2.net);
  CHECK(r1.net.ToCheckpoint(1).Encode() == r2.net.ToCheckpoint(1).Encode());
  CHECK(r1.epoch_losses.back() < r1.epoch_losses.front());
  for (std::size_t e = 1; e < 5; ++e) CHECK(r1.epoch_losses[e] < r1.epoch_losses[e - 1]);
  CHECK(asv::EmbeddingNet::FromCheckpoint(r1.net.ToCheckpoint(1)) == r1.net);

  const auto trials = synth::MakeTrials(corpus.eval, 20, 20, 3);
  auto net = std::make_shared<const asv::EmbeddingNet>(r1.net);
  const asv::AsvPipeline pipe{net, {}, false};
  const auto serial = asv::EvalTrials(pipe, corpus.eval, trials);
  const auto parallel = asv::EvalTrials(pipe, corpus.eval, trials, {}, {.threads = 4});
  CHECK(serial.scores == parallel.scores);
  CHECK(serial.size() == trials.size());
  double tar = 0.0, non = 0.0;
  for (std::size_t i = 0; i < serial.size(); ++i) {
    const auto& t = trials.trials[i];
    CHECK(serial.is_target[i] == (t.label == synth::TrialLabel::kTarget));
    CHECK(serial.scores[i] == asv::Score(*net, corpus.eval[t.enroll].features,
                                         corpus.eval[t.test].features));
    (serial.is_target[i] ? tar : non) += serial.scores[i] / 20.0;
  }
  CHECK(tar > non);
}

TEST_CASE("alteration policy contract") {
  const FeatureMatrix x = RandomFeatures(40, 12, 1);
  recon::AlterationPolicy none{.time_start_prob = 0.0, .channel_block_prob = 0.0};
  const auto same = recon::Alter(x, none, 3);
  CHECK(same.features == x);
  CHECK(same.mask.Count() == 0);

  const recon::AlterationPolicy p{.magnitude_prob = 0.05};
  const auto a = recon::Alter(x, p, 11);
  CHECK(a.mask == recon::Alter(x, p, 11).mask);
  CHECK(a.features == recon::Alter(x, p, 11).features);
  for (std::size_t t = 0; t < 40; ++t) {
    for (std::size_t c = 0; c < 12; ++c) {
      if (!a.mask(t, c)) CHECK(a.features(t, c) == x(t, c));
    }
  }
  CHECK_THROWS_AS(recon::Alter(FeatureMatrix(6, 12), p, 1), ValidationError);
  CHECK_THROWS_AS(recon::Alter(FeatureMatrix(40, 4), p, 1), ValidationError);
  CHECK_THROWS_AS(recon::AlterationPolicy{.time_start_prob = 1.5}.Validate(), ValidationError);
}

TEST_CASE("altered frame fraction is about fifteen percent") {
  const FeatureMatrix x(96, 24, 1.0);
  const recon::AlterationPolicy p{.channel_block_prob = 0.0};
  double frac = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto a = recon::Alter(x, p, seed);
    std::size_t frames = 0;
    for (std::size_t t = 0; t < 96; ++t) frames += a.mask(t, 0);
    frac += frames / 96.0 / 1000.0;
  }
  CHECK(std::abs(frac - 0.15) <= 0.03);
}

TEST_CASE("recon net shape, determinism, checkpoints and bounded outputs") {
  const recon::ReconNet net(SmallRecon(), 2);
  const FeatureMatrix x = RandomFeatures(20, 12, 5);
  const FeatureMatrix y = net.Reconstruct(x);
  CHECK(y.frames() == 20);
  CHECK(y.channels() == 12);
  CHECK(net.Reconstruct(x) == y);
  CHECK(recon::ReconNet::FromCheckpoint(net.ToCheckpoint(3)) == net);
  CHECK_FALSE(recon::ReconNet(SmallRecon(), 3) == net);
  CHECK_THROWS_AS(net.Reconstruct(FeatureMatrix(20, 11)), ValidationError);
  CHECK_THROWS_AS((recon::ReconConfig{.d_model = 30, .heads = 4}.Validate()), ValidationError);

  const recon::ReconNet full({}, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    FeatureMatrix big = RandomFeatures(32, 24, seed, 10.0);
    for (double& v : big.values()) v = std::clamp(v, -10.0, 10.0);
    CHECK(full.Reconstruct(big).AllFinite());
  }
}

TEST_CASE("positional encoding uses absolute offsets") {
  const nc::Tensor whole = recon::PositionalEncoding(20, 0, 8);
  const nc::Tensor tail = recon::PositionalEncoding(5, 15, 8);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t d = 0; d < 8; ++d) CHECK(tail.at(t, d) == whole.at(t + 15, d));
  }
  CHECK(whole.at(0, 0) == 0.0);
  CHECK(whole.at(0, 1) == 1.0);
}

TEST_CASE("cascade composition") {
  auto net = std::make_shared<const recon::ReconNet>(SmallRecon(), 4);
  const FeatureMatrix x = RandomFeatures(16, 12, 8);
  CHECK(recon::Cascade(net, 0).Apply(x) == x);
  const FeatureMatrix r2 = net->Reconstruct(net->Reconstruct(x));
  CHECK(recon::Cascade(net, 2).Apply(x) == r2);
  CHECK(recon::Cascade(net, 5).Apply(x) == recon::Cascade(net, 3).Apply(recon::Cascade(net, 2).Apply(x)));
  CHECK(recon::Cascade(net, 3, "recon0").name() == "3xrecon0");

  nc::Graph g;
  const auto y = recon::Cascade(net, 2).Apply(g, g.Constant(x.ToTensor()));
  CHECK(MaxAbsDiff(FeatureMatrix::FromTensor(y.value()), r2) == 0.0);
}

TEST_CASE("recon pretraining is deterministic and reduces held-out loss") {
  const synth::Corpus corpus = SmallCorpus();
  recon::PretrainConfig pc;
  pc.steps = 120;
  pc.batch_size = 4;
  pc.crop_frames = 16;
  pc.peak_lr = 5e-3;
  const auto r1 = recon::PretrainRecon(corpus.train, SmallRecon(), pc, 3);
  const auto r2 = recon::PretrainRecon(corpus.train, SmallRecon(), pc, 3);
  CHECK(r1.net == r2.net);
  CHECK(r1.step_losses == r2.step_losses);
  CHECK(r1.step_losses.size() == 120);
  const recon::ReconNet init(SmallRecon(), DeriveSeed(3, 0));
  const auto before = recon::EvaluateRecon(init, corpus.eval, pc.policy, 1);
  const auto after = recon::EvaluateRecon(r1.net, corpus.eval, pc.policy, 1);
  CHECK(after.altered_l1 < before.altered_l1);
  CHECK(after.clean_l1 < before.clean_l1);
  CHECK_FALSE(recon::PretrainRecon(corpus.train, SmallRecon(), pc, 4).net == r1.net);
}

TEST_CASE("bim leaves the input alone when the gradient vanishes") {
  const attack::VictimPipeline constant(
      [](const FeatureMatrix&) { return nc::Tensor::Vector({1.0}); },
      [](nc::Graph& g, nc::Var, const nc::Tensor&) { return g.Constant(nc::Tensor::Vector({0.5})); },
      "constant");
  const FeatureMatrix x = RandomFeatures(10, 4, 1);
  CHECK(attack::BimAttack(constant, FeatureMatrix(10, 4), x, synth::TrialLabel::kNontarget, {}) == x);
}

TEST_CASE("single step bim matches the closed form") {
  auto net = std::make_shared<const asv::EmbeddingNet>(asv::EmbeddingConfig{}, 6);
  const auto victim = attack::MakeVictim(net);
  const FeatureMatrix e = RandomFeatures(24, 24, 1), x = RandomFeatures(24, 24, 2);
  const nc::Tensor enrolled = victim.Enroll(e);
  const FeatureMatrix grad = victim.Gradient(enrolled, x);
  const attack::AttackConfig cfg{.epsilon = 0.3, .iterations = 1};
  for (auto label : {synth::TrialLabel::kNontarget, synth::TrialLabel::kTarget}) {
    const double d = label == synth::TrialLabel::kTarget ? -1.0 : 1.0;
    const FeatureMatrix adv = attack::BimAttack(victim, enrolled, x, label, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double g = grad.values()[i];
      const double expect = x.values()[i] + (g > 0 ? d * 0.3 : g < 0 ? -d * 0.3 : 0.0);
      CHECK(adv.values()[i] == expect);
    }
  }
}

TEST_CASE("bim stays inside the epsilon ball after every iteration") {
  auto net = std::make_shared<const asv::EmbeddingNet>(asv::EmbeddingConfig{}, 7);
  const auto victim = attack::MakeVictim(net);
  std::size_t raised = 0;
  const std::size_t trials = 40;
  for (std::uint64_t s = 0; s < trials; ++s) {
    const FeatureMatrix e = RandomFeatures(24, 24, 2 * s), x = RandomFeatures(24, 24, 2 * s + 1);
    // A large step makes the clip active at every iteration.
    for (std::size_t n = 1; n <= 5; ++n) {
      const attack::AttackConfig cfg{.epsilon = 0.3, .iterations = n, .alpha = 0.2};
      const FeatureMatrix adv = attack::BimAttack(victim, e, x, synth::TrialLabel::kNontarget, cfg);
      CHECK(MaxAbsDiff(adv, x) <= 0.3 + 1e-12);
    }
    const FeatureMatrix adv = attack::BimAttack(victim, e, x, synth::TrialLabel::kNontarget, {});
    CHECK(adv == attack::BimAttack(victim, e, x, synth::TrialLabel::kNontarget, {}));
    raised += asv::Score(*net, e, adv) >= asv::Score(*net, e, x);
  }
  CHECK(raised >= trials * 95 / 100);
}

TEST_CASE("tiny steps move the nontarget score up") {
  auto net = std::make_shared<const asv::EmbeddingNet>(asv::EmbeddingConfig{}, 8);
  const auto victim = attack::MakeVictim(net);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const FeatureMatrix e = RandomFeatures(24, 24, 100 + s), x = RandomFeatures(24, 24, 200 + s);
    const attack::AttackConfig cfg{.epsilon = 1e-4, .iterations = 1, .alpha = 1e-4};
    const FeatureMatrix adv = attack::BimAttack(victim, e, x, synth::TrialLabel::kNontarget, cfg);
    CHECK(asv::Score(*net, e, adv) >= asv::Score(*net, e, x));
  }
}

TEST_CASE("attack config and victim validation") {
  CHECK_THROWS_AS((attack::AttackConfig{.epsilon = -1.0}.Validate()), ValidationError);
  CHECK_THROWS_AS((attack::AttackConfig{.iterations = 0}.Validate()), ValidationError);
  CHECK_THROWS_AS((attack::AttackConfig{.epsilon = 0.3, .alpha = 0.5}.Validate()), ValidationError);
  CHECK(attack::AttackConfig{}.StepSize() == doctest::Approx(0.06));
  auto net = std::make_shared<const asv::EmbeddingNet>(asv::EmbeddingConfig{}, 9);
  try {
    attack::MakeVictim(net, {std::make_shared<filters::FilterStage>(
                                filters::FilterSpec{filters::FilterKind::kMedian, 3, 1.0})});
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("median3") != std::string::npos);
  }
  const FeatureMatrix e = RandomFeatures(24, 24, 1), x = RandomFeatures(24, 24, 2);
  CHECK(attack::MakeVictim(net).Score(attack::MakeVictim(net).Enroll(e), x) ==
        doctest::Approx(asv::Score(*net, e, x)).epsilon(1e-14));
}

TEST_CASE("trial-set attack: contract, zero budget, threads and substitutes") {
  const synth::Corpus corpus = SmallCorpus();
  const auto trials = synth::MakeTrials(corpus.eval, 8, 8, 2);
  auto net = std::make_shared<const asv::EmbeddingNet>(SmallAsv(), 1);
  const auto bare = attack::MakeVictim(net);
  const auto serial = attack::AttackTrialSet(bare, corpus.eval, trials, {});
  CHECK(serial.size() == trials.size());
  CHECK(attack::AttackTrialSet(bare, corpus.eval, trials, {}, 3) == serial);
  const auto none = attack::AttackTrialSet(bare, corpus.eval, trials, {.epsilon = 0.0});
  for (std::size_t i = 0; i < trials.size(); ++i) {
    CHECK(none[i] == corpus.eval[trials.trials[i].test].features);
    CHECK(MaxAbsDiff(serial[i], corpus.eval[trials.trials[i].test].features) <= 0.3 + 1e-12);
  }
  auto purifier = std::make_shared<const recon::ReconNet>(SmallRecon(), 3);
  const auto aware = attack::MakeVictim(net, {std::make_shared<recon::Cascade>(purifier, 1)});
  const auto through = attack::AttackTrialSet(aware, corpus.eval, trials, {});
  std::size_t differ = 0;
  for (std::size_t i = 0; i < trials.size(); ++i) differ += !(through[i] == serial[i]);
  CHECK(differ == trials.size());
  const auto res = nc::GradCheck(
      [&](nc::Graph& g, nc::Var v) {
        return aware.Score(g, v, aware.Enroll(corpus.eval[0].features));
      },
      corpus.eval[1].features.ToTensor(), {.max_coords = 24});
  CHECK(res.max_relative_error < 1e-5);
}
