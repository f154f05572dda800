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

#include "advasv/recon.hpp"

#include <algorithm>
#include <cmath>

#include "advasv/error.hpp"
#include "advasv/numcore/ops.hpp"
#include "advasv/numcore/optim.hpp"
#include "advasv/rng.hpp"

namespace advasv::recon {

namespace nc = numcore;

namespace {

constexpr std::size_t kLayerParams = 16;

// Parameter order: in_w, in_b, then per layer wq bq wk bk wv bv wo bo
// ln1_g ln1_b ff_w1 ff_b1 ff_w2 ff_b2 ln2_g ln2_b, then head_w1 head_b1
// head_w2 head_b2.
std::vector<std::pair<std::string, nc::Shape>> ParamShapes(const ReconConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<std::pair<std::string, nc::Shape>> out;
  out.push_back({"recon.in_w", {c.channels, d}});
  out.push_back({"recon.in_b", {d}});
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "recon.l" + std::to_string(l) + ".";
    for (const char* n : {"q", "k", "v", "o"}) {
      out.push_back({p + "w" + n, {d, d}});
      out.push_back({p + "b" + n, {d}});
    }
    out.push_back({p + "ln1_g", {d}});
    out.push_back({p + "ln1_b", {d}});
    out.push_back({p + "ff_w1", {d, c.ffn}});
    out.push_back({p + "ff_b1", {c.ffn}});
    out.push_back({p + "ff_w2", {c.ffn, d}});
    out.push_back({p + "ff_b2", {d}});
    out.push_back({p + "ln2_g", {d}});
    out.push_back({p + "ln2_b", {d}});
  }
  out.push_back({"recon.head_w1", {d, d}});
  out.push_back({"recon.head_b1", {d}});
  out.push_back({"recon.head_w2", {d, c.channels}});
  out.push_back({"recon.head_b2", {c.channels}});
  return out;
}

bool EndsWith(const std::string& s, const char* suffix) {
  const std::string t(suffix);
  return s.size() >= t.size() && s.compare(s.size() - t.size(), t.size(), t) == 0;
}

nc::Var AddRows(nc::Var x, const nc::Tensor& pe) {
  return nc::Add(x, x.graph().Constant(pe));
}

}  // namespace

void AlterationPolicy::Validate() const {
  if (time_width < 1 || channel_width < 1) {
    throw ValidationError("alteration policy: widths must be >= 1");
  }
  for (double p : {magnitude_prob, time_start_prob, channel_block_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("alteration policy: probabilities must lie in [0, 1]");
    }
  }
}

std::size_t AlterationMask::Count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

Altered Alter(const FeatureMatrix& x, const AlterationPolicy& policy, std::uint64_t seed) {
  policy.Validate();
  const std::size_t rows = x.frames(), cols = x.channels();
  if (rows < policy.time_width || cols < policy.channel_width) {
    throw ValidationError("alter: input " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " smaller than alteration block " +
                          std::to_string(policy.time_width) + "x" +
                          std::to_string(policy.channel_width));
  }
  Altered out{x, {rows, cols, std::vector<std::uint8_t>(rows * cols, 0)}};
  Rng rng(seed);
  for (std::size_t t = 0; t < rows; ++t) {
    if (!rng.Bernoulli(policy.time_start_prob)) continue;
    const std::size_t end = std::min(rows, t + policy.time_width);
    for (std::size_t u = t; u < end; ++u)
      for (std::size_t c = 0; c < cols; ++c) out.mask.cells[u * cols + c] = 1;
  }
  if (rng.Bernoulli(policy.channel_block_prob)) {
    const std::size_t start = rng.Below(cols - policy.channel_width + 1);
    for (std::size_t t = 0; t < rows; ++t)
      for (std::size_t c = start; c < start + policy.channel_width; ++c)
        out.mask.cells[t * cols + c] = 1;
  }
  for (std::size_t i = 0; i < rows * cols; ++i) {
    if (out.mask.cells[i]) out.features.values()[i] = 0.0;
  }
  if (policy.magnitude_prob > 0.0) {
    for (std::size_t i = 0; i < rows * cols; ++i) {
      if (rng.Bernoulli(policy.magnitude_prob)) {
        out.features.values()[i] = rng.Normal();
        out.mask.cells[i] = 1;
      }
    }
  }
  return out;
}

void ReconConfig::Validate() const {
  if (channels == 0 || d_model == 0 || heads == 0 || layers == 0 || ffn == 0) {
    throw ValidationError("recon config: sizes must be positive");
  }
  if (d_model % heads != 0) {
    throw ValidationError("recon config: d_model " + std::to_string(d_model) +
                          " not divisible by heads " + std::to_string(heads));
  }
}

ReconNet::ReconNet(const ReconConfig& config, std::uint64_t init_seed) : config_(config) {
  config.Validate();
  Rng rng(init_seed);
  for (auto& [name, shape] : ParamShapes(config)) {
    nc::Tensor t(shape);
    if (EndsWith(name, "_g")) {
      for (double& v : t.values()) v = 1.0;
    } else if (shape.size() == 2) {
      const double sigma = std::sqrt(2.0 / static_cast<double>(shape[0] + shape[1]));
      for (double& v : t.values()) v = sigma * rng.Normal();
    }
    params_.push_back({name, std::move(t)});
  }
}

std::vector<nc::Var> ReconNet::Bind(nc::Graph& g, bool trainable) const {
  std::vector<nc::Var> out;
  out.reserve(params_.size());
  for (const auto& p : params_) {
    nc::Tensor copy(p.tensor.shape(), p.tensor.storage());
    out.push_back(trainable ? g.Input(std::move(copy)) : g.Constant(std::move(copy)));
  }
  return out;
}

void ReconNet::CheckInput(const nc::Tensor& x) const {
  if (x.rank() != 2 || x.cols() != config_.channels) {
    throw ValidationError("recon: expected [T, " + std::to_string(config_.channels) +
                          "] input, got " + nc::ShapeToString(x.shape()));
  }
}

nc::Tensor PositionalEncoding(std::size_t frames, std::size_t offset, std::size_t d) {
  nc::Tensor pe({frames, d});
  for (std::size_t t = 0; t < frames; ++t) {
    const double pos = static_cast<double>(t + offset);
    for (std::size_t i = 0; i < d; i += 2) {
      const double angle =
          pos / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      pe.at(t, i) = std::sin(angle);
      if (i + 1 < d) pe.at(t, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

nc::Var ReconNet::Forward(std::span<const nc::Var> p, nc::Var x, std::size_t offset) const {
  CheckInput(x.value());
  if (p.size() != params_.size()) throw ValidationError("recon: parameter count mismatch");
  const std::size_t frames = x.value().rows();
  nc::Var h = nc::AddRowBias(nc::MatMul(x, p[0]), p[1]);
  h = AddRows(h, PositionalEncoding(frames, offset, config_.d_model));
  std::size_t i = 2;
  for (std::size_t l = 0; l < config_.layers; ++l, i += kLayerParams) {
    const nc::AttentionParams a{p[i], p[i + 1], p[i + 2], p[i + 3],
                                p[i + 4], p[i + 5], p[i + 6], p[i + 7]};
    nc::Var att = nc::MultiHeadAttention(h, h, h, config_.heads, a);
    h = nc::LayerNorm(nc::Add(h, att), p[i + 8], p[i + 9]);
    nc::Var ff = nc::Gelu(nc::AddRowBias(nc::MatMul(h, p[i + 10]), p[i + 11]));
    ff = nc::AddRowBias(nc::MatMul(ff, p[i + 12]), p[i + 13]);
    h = nc::LayerNorm(nc::Add(h, ff), p[i + 14], p[i + 15]);
  }
  nc::Var y = nc::Gelu(nc::AddRowBias(nc::MatMul(h, p[i]), p[i + 1]));
  return nc::AddRowBias(nc::MatMul(y, p[i + 2]), p[i + 3]);
}

FeatureMatrix ReconNet::Reconstruct(const FeatureMatrix& x) const {
  nc::Graph g;
  const auto p = Bind(g, false);
  return FeatureMatrix::FromTensor(Forward(p, g.Constant(x.ToTensor())).value());
}

std::vector<nc::Tensor*> ReconNet::Parameters() {
  std::vector<nc::Tensor*> out;
  for (auto& p : params_) out.push_back(&p.tensor);
  return out;
}

std::size_t ReconNet::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

Checkpoint ReconNet::ToCheckpoint(std::uint64_t config_hash) const {
  Checkpoint ck;
  ck.config_hash = config_hash;
  ck.Add("recon.meta", nc::Tensor::Vector({static_cast<double>(config_.channels),
                                           static_cast<double>(config_.d_model),
                                           static_cast<double>(config_.heads),
                                           static_cast<double>(config_.layers),
                                           static_cast<double>(config_.ffn)}));
  for (const auto& p : params_) ck.Add(p.name, p.tensor);
  return ck;
}

ReconNet ReconNet::FromCheckpoint(const Checkpoint& ck) {
  const nc::Tensor& meta = ck.Get("recon.meta");
  if (meta.size() != 5) throw ValidationError("recon checkpoint: malformed meta tensor");
  ReconNet net;
  net.config_ = {static_cast<std::size_t>(meta[0]), static_cast<std::size_t>(meta[1]),
                 static_cast<std::size_t>(meta[2]), static_cast<std::size_t>(meta[3]),
                 static_cast<std::size_t>(meta[4])};
  net.config_.Validate();
  for (auto& [name, shape] : ParamShapes(net.config_)) {
    const nc::Tensor& t = ck.Get(name);
    if (t.shape() != shape) {
      throw ValidationError("recon checkpoint: tensor " + name + " has shape " +
                            nc::ShapeToString(t.shape()) + ", expected " +
                            nc::ShapeToString(shape));
    }
    net.params_.push_back({name, t});
  }
  return net;
}

bool operator==(const ReconNet& a, const ReconNet& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    if (a.params_[i].name != b.params_[i].name ||
        !(a.params_[i].tensor == b.params_[i].tensor)) {
      return false;
    }
  }
  return true;
}

PretrainResult PretrainRecon(std::span<const synth::Utterance> corpus,
                             const ReconConfig& net_config, const PretrainConfig& config,
                             std::uint64_t seed) {
  if (corpus.empty()) throw ValidationError("pretrain_recon: empty corpus");
  if (config.steps < 1) throw ValidationError("pretrain_recon: steps must be >= 1");
  if (config.batch_size < 1) throw ValidationError("pretrain_recon: batch_size must be >= 1");
  config.policy.Validate();
  for (const auto& u : corpus) {
    if (config.crop_frames > u.features.frames()) {
      throw ValidationError("pretrain_recon: crop of " + std::to_string(config.crop_frames) +
                            " frames exceeds an utterance of " +
                            std::to_string(u.features.frames()));
    }
  }

  PretrainResult result{ReconNet(net_config, DeriveSeed(seed, 0)), {}};
  ReconNet& net = result.net;
  nc::Adam adam({.peak = config.peak_lr,
                 .warmup_fraction = config.warmup_fraction,
                 .total_steps = static_cast<std::int64_t>(config.steps)});
  std::vector<nc::Tensor*> params = net.Parameters();
  for (nc::Tensor* t : params) t->ZeroGrad();

  for (std::size_t step = 0; step < config.steps; ++step) {
    Rng rng(DeriveSeed(seed, 1, step));
    nc::Graph g;
    const auto p = net.Bind(g, true);
    nc::Var total;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const FeatureMatrix& full = corpus[rng.Below(corpus.size())].features;
      const std::size_t len = config.crop_frames == 0 ? full.frames() : config.crop_frames;
      const std::size_t start = rng.Below(full.frames() - len + 1);
      FeatureMatrix crop(len, full.channels());
      std::copy_n(full.values().begin() + static_cast<std::ptrdiff_t>(start * full.channels()),
                  len * full.channels(), crop.values().begin());
      const Altered alt = Alter(crop, config.policy, rng.NextU64());
      nc::Var pred = net.Forward(p, g.Constant(alt.features.ToTensor()), start);
      nc::Var loss = nc::L1Loss(pred, g.Constant(crop.ToTensor()));
      total = b == 0 ? loss : nc::Add(total, loss);
    }
    nc::Var loss = nc::Scale(total, 1.0 / static_cast<double>(config.batch_size));
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      throw NumericalError("pretrain_recon: non-finite loss at step " + std::to_string(step));
    }
    g.Backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto src = g.grad(p[i]);
      std::copy(src.begin(), src.end(), params[i]->grad().begin());
    }
    adam.Step(params);
    result.step_losses.push_back(value);
  }
  for (nc::Tensor* t : params) t->DropGrad();
  return result;
}

ReconEval EvaluateRecon(const ReconNet& net, std::span<const synth::Utterance> utts,
                        const AlterationPolicy& policy, std::uint64_t seed) {
  if (utts.empty()) throw ValidationError("evaluate_recon: no utterances");
  ReconEval ev;
  double cells = 0.0, masked = 0.0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const FeatureMatrix& x = utts[i].features;
    const Altered alt = Alter(x, policy, DeriveSeed(seed, i));
    const FeatureMatrix from_alt = net.Reconstruct(alt.features);
    const FeatureMatrix from_clean = net.Reconstruct(x);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double truth = x.values()[j];
      ev.altered_l1 += std::abs(from_alt.values()[j] - truth);
      ev.clean_l1 += std::abs(from_clean.values()[j] - truth);
      if (alt.mask.cells[j]) {
        ev.masked_l1 += std::abs(from_alt.values()[j] - truth);
        ev.masked_zero_l1 += std::abs(alt.features.values()[j] - truth);
        masked += 1.0;
      }
    }
    cells += static_cast<double>(x.size());
  }
  ev.altered_l1 /= cells;
  ev.clean_l1 /= cells;
  if (masked > 0.0) {
    ev.masked_l1 /= masked;
    ev.masked_zero_l1 /= masked;
  }
  return ev;
}

Cascade::Cascade(std::shared_ptr<const ReconNet> net, std::size_t k, std::string label)
    : net_(std::move(net)), k_(k), label_(std::move(label)) {
  if (!net_ && k_ > 0) throw ValidationError("cascade: missing reconstruction model");
}

std::string Cascade::name() const { return std::to_string(k_) + "x" + label_; }

FeatureMatrix Cascade::Apply(const FeatureMatrix& x) const {
  FeatureMatrix y = x;
  for (std::size_t i = 0; i < k_; ++i) y = net_->Reconstruct(y);
  return y;
}

nc::Var Cascade::Apply(nc::Graph& g, nc::Var x) const {
  if (k_ == 0) return x;
  const auto p = net_->Bind(g, false);
  for (std::size_t i = 0; i < k_; ++i) x = net_->Forward(p, x);
  return x;
}

}  // namespace advasv::recon
