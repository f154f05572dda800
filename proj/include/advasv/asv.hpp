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
#include <vector>

#include "advasv/checkpoint.hpp"
#include "advasv/features.hpp"
#include "advasv/metrics.hpp"
#include "advasv/numcore/graph.hpp"
#include "advasv/stage.hpp"
#include "advasv/synthdata.hpp"

namespace advasv::asv {

struct EmbeddingConfig {
  std::size_t channels = 24;
  std::size_t hidden = 32;
  std::size_t embedding = 32;
  std::size_t n_speakers = 20;
};

// Frame-wise MLP (two GELU layers), mean pooling over time, affine
// projection and length normalization. The class-weight matrix is only used
// by the training loss.
class EmbeddingNet {
 public:
  struct Bound {
    numcore::Var w1, b1, w2, b2, proj, proj_bias, class_weights;
  };

  EmbeddingNet(const EmbeddingConfig& config, std::uint64_t init_seed);

  const EmbeddingConfig& config() const { return config_; }

  // Places parameters in `g`, as inputs when `trainable` or constants
  // otherwise.
  Bound Bind(numcore::Graph& g, bool trainable) const;
  // Unit-norm embedding [D] of a [T, C] input.
  numcore::Var Embed(const Bound& params, numcore::Var x) const;

  numcore::Tensor Embed(const FeatureMatrix& x) const;

  // Training handles, class weights last.
  std::vector<numcore::Tensor*> Parameters();
  std::vector<const numcore::Tensor*> Parameters() const;

  Checkpoint ToCheckpoint(std::uint64_t config_hash) const;
  static EmbeddingNet FromCheckpoint(const Checkpoint& ck);

  friend bool operator==(const EmbeddingNet& a, const EmbeddingNet& b);

 private:
  EmbeddingNet() = default;
  void CheckInput(const numcore::Tensor& x) const;

  EmbeddingConfig config_;
  numcore::Tensor w1_, b1_, w2_, b2_, proj_, proj_bias_, class_weights_;
};

double Score(const EmbeddingNet& net, const FeatureMatrix& enroll,
             const FeatureMatrix& test);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double peak_lr = 5e-3;
  double warmup_fraction = 0.07;
  double margin = 0.2;
  double scale = 30.0;
};

struct TrainResult {
  EmbeddingNet net;
  // Mean AAM-softmax loss of each epoch.
  std::vector<double> epoch_losses;
};

// Speaker ids are mapped to classes in order of first appearance after
// sorting. Deterministic given `seed`.
TrainResult TrainAsv(std::span<const synth::Utterance> train,
                     const EmbeddingConfig& net_config, const TrainConfig& config,
                     std::uint64_t seed);

// Scoring pipeline: optional purification chain in front of the embedding
// net. The chain is applied to test utterances, and to enrollment too when
// purify_enroll is set.
struct AsvPipeline {
  std::shared_ptr<const EmbeddingNet> net;
  StageChain defense;
  bool purify_enroll = false;
};

struct EvalOptions {
  std::size_t threads = 1;
};

// One score per trial, in trial order. `test_override`, when non-empty,
// supplies per-trial test features (adversarial sets) in place of the pool
// utterance.
metrics::ScoredTrials EvalTrials(const AsvPipeline& pipeline,
                                 std::span<const synth::Utterance> pool,
                                 const synth::TrialSet& trials,
                                 std::span<const FeatureMatrix> test_override = {},
                                 const EvalOptions& options = {});

}  // namespace advasv::asv
