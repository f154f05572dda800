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

#include "advasv/asv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "advasv/error.hpp"
#include "advasv/numcore/ops.hpp"
#include "advasv/numcore/optim.hpp"
#include "advasv/parallel.hpp"
#include "advasv/rng.hpp"

namespace advasv::asv {

namespace nc = numcore;

namespace {

nc::Tensor GlorotNormal(std::size_t fan_in, std::size_t fan_out, nc::Shape shape,
                        Rng& rng) {
  nc::Tensor t(std::move(shape));
  const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values()) v = sigma * rng.Normal();
  return t;
}

double Cosine(const nc::Tensor& a, const nc::Tensor& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

}  // namespace

EmbeddingNet::EmbeddingNet(const EmbeddingConfig& config, std::uint64_t init_seed)
    : config_(config) {
  if (config.channels == 0 || config.hidden == 0 || config.embedding == 0) {
    throw ValidationError("embedding net: sizes must be positive");
  }
  if (config.n_speakers < 2) {
    throw ValidationError("embedding net: need at least 2 training speakers");
  }
  Rng rng(init_seed);
  const std::size_t c = config.channels, h = config.hidden, d = config.embedding;
  w1_ = GlorotNormal(c, h, {c, h}, rng);
  b1_ = nc::Tensor({h});
  w2_ = GlorotNormal(h, h, {h, h}, rng);
  b2_ = nc::Tensor({h});
  proj_ = GlorotNormal(h, d, {d, h}, rng);
  proj_bias_ = nc::Tensor({d});
  class_weights_ = nc::Tensor({config.n_speakers, d});
  for (double& v : class_weights_.values()) v = rng.Normal();
}

EmbeddingNet::Bound EmbeddingNet::Bind(nc::Graph& g, bool trainable) const {
  auto put = [&](const nc::Tensor& t) {
    nc::Tensor copy(t.shape(), t.storage());
    return trainable ? g.Input(std::move(copy)) : g.Constant(std::move(copy));
  };
  return {put(w1_), put(b1_), put(w2_), put(b2_),
          put(proj_), put(proj_bias_), put(class_weights_)};
}

void EmbeddingNet::CheckInput(const nc::Tensor& x) const {
  if (x.rank() != 2 || x.cols() != config_.channels) {
    throw ValidationError("embed: expected [T, " + std::to_string(config_.channels) +
                          "] input, got " + nc::ShapeToString(x.shape()));
  }
}

nc::Var EmbeddingNet::Embed(const Bound& p, nc::Var x) const {
  CheckInput(x.value());
  nc::Var h1 = nc::Gelu(nc::AddRowBias(nc::MatMul(x, p.w1), p.b1));
  nc::Var h2 = nc::Gelu(nc::AddRowBias(nc::MatMul(h1, p.w2), p.b2));
  nc::Var pooled = nc::MeanRows(h2);
  nc::Var e = nc::Add(nc::MatVec(p.proj, pooled), p.proj_bias);
  return nc::L2Normalize(e);
}

nc::Tensor EmbeddingNet::Embed(const FeatureMatrix& x) const {
  nc::Graph g;
  const Bound p = Bind(g, false);
  nc::Tensor out = Embed(p, g.Constant(x.ToTensor())).value();
  return out;
}

std::vector<nc::Tensor*> EmbeddingNet::Parameters() {
  return {&w1_, &b1_, &w2_, &b2_, &proj_, &proj_bias_, &class_weights_};
}

std::vector<const nc::Tensor*> EmbeddingNet::Parameters() const {
  return {&w1_, &b1_, &w2_, &b2_, &proj_, &proj_bias_, &class_weights_};
}

Checkpoint EmbeddingNet::ToCheckpoint(std::uint64_t config_hash) const {
  Checkpoint ck;
  ck.config_hash = config_hash;
  ck.Add("asv.meta", nc::Tensor::Vector({static_cast<double>(config_.channels),
                                         static_cast<double>(config_.hidden),
                                         static_cast<double>(config_.embedding),
                                         static_cast<double>(config_.n_speakers)}));
  ck.Add("asv.w1", w1_);
  ck.Add("asv.b1", b1_);
  ck.Add("asv.w2", w2_);
  ck.Add("asv.b2", b2_);
  ck.Add("asv.proj", proj_);
  ck.Add("asv.proj_bias", proj_bias_);
  ck.Add("asv.class_weights", class_weights_);
  return ck;
}

EmbeddingNet EmbeddingNet::FromCheckpoint(const Checkpoint& ck) {
  const nc::Tensor& meta = ck.Get("asv.meta");
  if (meta.size() != 4) throw ValidationError("asv checkpoint: malformed meta tensor");
  EmbeddingNet net;
  net.config_ = {static_cast<std::size_t>(meta[0]), static_cast<std::size_t>(meta[1]),
                 static_cast<std::size_t>(meta[2]), static_cast<std::size_t>(meta[3])};
  const auto& c = net.config_;
  auto load = [&](const char* name, nc::Shape shape) {
    const nc::Tensor& t = ck.Get(name);
    if (t.shape() != shape) {
      throw ValidationError(std::string("asv checkpoint: tensor ") + name +
                            " has shape " + nc::ShapeToString(t.shape()) +
                            ", expected " + nc::ShapeToString(shape));
    }
    return t;
  };
  net.w1_ = load("asv.w1", {c.channels, c.hidden});
  net.b1_ = load("asv.b1", {c.hidden});
  net.w2_ = load("asv.w2", {c.hidden, c.hidden});
  net.b2_ = load("asv.b2", {c.hidden});
  net.proj_ = load("asv.proj", {c.embedding, c.hidden});
  net.proj_bias_ = load("asv.proj_bias", {c.embedding});
  net.class_weights_ = load("asv.class_weights", {c.n_speakers, c.embedding});
  return net;
}

bool operator==(const EmbeddingNet& a, const EmbeddingNet& b) {
  const auto pa = a.Parameters();
  const auto pb = b.Parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!(*pa[i] == *pb[i])) return false;
  }
  return true;
}

double Score(const EmbeddingNet& net, const FeatureMatrix& enroll,
             const FeatureMatrix& test) {
  return Cosine(net.Embed(enroll), net.Embed(test));
}

TrainResult TrainAsv(std::span<const synth::Utterance> train,
                     const EmbeddingConfig& net_config, const TrainConfig& config,
                     std::uint64_t seed) {
  if (config.epochs < 1) throw ValidationError("train_asv: epochs must be >= 1");
  if (config.batch_size < 1) throw ValidationError("train_asv: batch_size must be >= 1");
  std::map<std::uint32_t, std::size_t> classes;
  for (const auto& u : train) classes.emplace(u.speaker_id, 0);
  if (classes.size() < 2) throw ValidationError("train_asv: need at least 2 speakers");
  std::size_t next = 0;
  for (auto& [id, cls] : classes) cls = next++;

  EmbeddingConfig cfg = net_config;
  cfg.n_speakers = classes.size();
  TrainResult result{EmbeddingNet(cfg, DeriveSeed(seed, 0)), {}};
  EmbeddingNet& net = result.net;

  const std::size_t batches = (train.size() + config.batch_size - 1) / config.batch_size;
  nc::Adam adam({.peak = config.peak_lr,
                 .warmup_fraction = config.warmup_fraction,
                 .total_steps = static_cast<std::int64_t>(config.epochs * batches)});
  std::vector<nc::Tensor*> params = net.Parameters();
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(DeriveSeed(seed, 1, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      nc::Graph g;
      const auto p = net.Bind(g, true);
      std::vector<nc::Var> losses;
      for (std::size_t k = begin; k < end; ++k) {
        const synth::Utterance& u = train[order[k]];
        nc::Var e = net.Embed(p, g.Constant(u.features.ToTensor()));
        losses.push_back(nc::AamSoftmaxLoss(e, p.class_weights, classes.at(u.speaker_id),
                                            config.margin, config.scale));
      }
      nc::Var total = losses[0];
      for (std::size_t k = 1; k < losses.size(); ++k) total = nc::Add(total, losses[k]);
      nc::Var loss = nc::Scale(total, 1.0 / static_cast<double>(losses.size()));
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericalError("train_asv: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(b));
      }
      g.Backward(loss);
      const nc::Var bound[] = {p.w1, p.b1, p.w2, p.b2, p.proj, p.proj_bias, p.class_weights};
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i]->ZeroGrad();
        auto src = g.grad(bound[i]);
        std::copy(src.begin(), src.end(), params[i]->grad().begin());
      }
      adam.Step(params);
      epoch_loss += value;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  for (nc::Tensor* t : params) t->DropGrad();
  return result;
}

metrics::ScoredTrials EvalTrials(const AsvPipeline& pipeline,
                                 std::span<const synth::Utterance> pool,
                                 const synth::TrialSet& trials,
                                 std::span<const FeatureMatrix> test_override,
                                 const EvalOptions& options) {
  if (!pipeline.net) throw ValidationError("eval_trials: pipeline has no network");
  if (!test_override.empty() && test_override.size() != trials.size()) {
    throw ValidationError("eval_trials: " + std::to_string(test_override.size()) +
                          " override features for " + std::to_string(trials.size()) +
                          " trials");
  }
  const EmbeddingNet& net = *pipeline.net;
  for (const auto& t : trials.trials) {
    if (t.enroll >= pool.size() || t.test >= pool.size()) {
      throw ValidationError("eval_trials: trial references utterance outside pool");
    }
  }
  // Embeddings are computed once per distinct input and shared by trials.
  std::vector<std::size_t> enroll_ids, test_ids;
  for (const auto& t : trials.trials) {
    enroll_ids.push_back(t.enroll);
    if (test_override.empty()) test_ids.push_back(t.test);
  }
  std::sort(enroll_ids.begin(), enroll_ids.end());
  enroll_ids.erase(std::unique(enroll_ids.begin(), enroll_ids.end()), enroll_ids.end());
  std::sort(test_ids.begin(), test_ids.end());
  test_ids.erase(std::unique(test_ids.begin(), test_ids.end()), test_ids.end());

  auto embed = [&](const FeatureMatrix& x, bool purify) {
    return purify ? net.Embed(ApplyChain(pipeline.defense, x)) : net.Embed(x);
  };
  std::vector<nc::Tensor> enroll_emb(enroll_ids.size());
  ParallelFor(enroll_ids.size(), options.threads, [&](std::size_t i) {
    enroll_emb[i] = embed(pool[enroll_ids[i]].features, pipeline.purify_enroll);
  });
  const std::size_t n_test = test_override.empty() ? test_ids.size() : trials.size();
  std::vector<nc::Tensor> test_emb(n_test);
  ParallelFor(n_test, options.threads, [&](std::size_t i) {
    const FeatureMatrix& x =
        test_override.empty() ? pool[test_ids[i]].features : test_override[i];
    test_emb[i] = embed(x, true);
  });

  auto slot = [](const std::vector<std::size_t>& ids, std::size_t id) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  metrics::ScoredTrials out;
  out.scores.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials.trials[i];
    const nc::Tensor& e = enroll_emb[slot(enroll_ids, t.enroll)];
    const nc::Tensor& x = test_override.empty() ? test_emb[slot(test_ids, t.test)] : test_emb[i];
    out.Add(Cosine(e, x), t.label == synth::TrialLabel::kTarget);
  }
  return out;
}

}  // namespace advasv::asv
