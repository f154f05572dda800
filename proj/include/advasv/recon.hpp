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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advasv/checkpoint.hpp"
#include "advasv/features.hpp"
#include "advasv/numcore/graph.hpp"
#include "advasv/stage.hpp"
#include "advasv/synthdata.hpp"

namespace advasv::recon {

struct AlterationPolicy {
  std::size_t time_width = 7;
  std::size_t channel_width = 5;
  double magnitude_prob = 0.0;
  double time_start_prob = 0.15 / 7.0;
  double channel_block_prob = 1.0;

  void Validate() const;
};

// Row-major T x C, 1 where the cell was altered.
struct AlterationMask {
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> cells;

  bool operator()(std::size_t t, std::size_t c) const { return cells[t * channels + c] != 0; }
  std::size_t Count() const;
  friend bool operator==(const AlterationMask&, const AlterationMask&) = default;
};

struct Altered {
  FeatureMatrix features;
  AlterationMask mask;
};

// Time blocks: every frame is a candidate start, kept with time_start_prob,
// and zeroes the next time_width frames (truncated at the end). Channel block:
// with channel_block_prob one band of channel_width channels is zeroed over all
// frames. Magnitude: each cell replaced by N(0, 1) with magnitude_prob.
Altered Alter(const FeatureMatrix& x, const AlterationPolicy& policy, std::uint64_t seed);

struct ReconConfig {
  std::size_t channels = 24;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t layers = 3;
  std::size_t ffn = 64;

  void Validate() const;
};

// Input projection plus sinusoidal positions, post-norm transformer encoder
// layers, and a two-layer prediction head back to the channel dimension.
class ReconNet {
 public:
  ReconNet(const ReconConfig& config, std::uint64_t init_seed);

  const ReconConfig& config() const { return config_; }

  std::vector<numcore::Var> Bind(numcore::Graph& g, bool trainable) const;
  // `offset` is the absolute frame index of row 0, used for positions.
  numcore::Var Forward(std::span<const numcore::Var> params, numcore::Var x,
                       std::size_t offset = 0) const;

  FeatureMatrix Reconstruct(const FeatureMatrix& x) const;

  std::vector<numcore::Tensor*> Parameters();
  std::size_t ParameterCount() const;

  Checkpoint ToCheckpoint(std::uint64_t config_hash) const;
  static ReconNet FromCheckpoint(const Checkpoint& ck);

  friend bool operator==(const ReconNet& a, const ReconNet& b);

 private:
  ReconNet() = default;
  void CheckInput(const numcore::Tensor& x) const;

  ReconConfig config_;
  std::vector<NamedTensor> params_;
};

numcore::Tensor PositionalEncoding(std::size_t frames, std::size_t offset, std::size_t d);

struct PretrainConfig {
  std::size_t steps = 3000;
  std::size_t batch_size = 32;
  // Random crops of this many frames; 0 uses whole utterances.
  std::size_t crop_frames = 32;
  double peak_lr = 2e-3;
  double warmup_fraction = 0.07;
  AlterationPolicy policy;
};

struct PretrainResult {
  ReconNet net;
  std::vector<double> step_losses;
};

PretrainResult PretrainRecon(std::span<const synth::Utterance> corpus,
                             const ReconConfig& net_config, const PretrainConfig& config,
                             std::uint64_t seed);

struct ReconEval {
  // L1 over all cells of recon(alter(x)) against x.
  double altered_l1 = 0.0;
  // L1 of recon(x) against x.
  double clean_l1 = 0.0;
  // Over altered cells only: prediction error and zero-fill error.
  double masked_l1 = 0.0;
  double masked_zero_l1 = 0.0;
};

ReconEval EvaluateRecon(const ReconNet& net, std::span<const synth::Utterance> utts,
                        const AlterationPolicy& policy, std::uint64_t seed);

// One frozen model applied `k` times.
class Cascade : public Stage {
 public:
  Cascade(std::shared_ptr<const ReconNet> net, std::size_t k, std::string label = "recon");

  std::string name() const override;
  bool differentiable() const override { return true; }
  FeatureMatrix Apply(const FeatureMatrix& x) const override;
  numcore::Var Apply(numcore::Graph& g, numcore::Var x) const override;

  std::size_t k() const { return k_; }

 private:
  std::shared_ptr<const ReconNet> net_;
  std::size_t k_;
  std::string label_;
};

}  // namespace advasv::recon
