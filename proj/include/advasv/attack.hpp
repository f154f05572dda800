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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advasv/asv.hpp"
#include "advasv/features.hpp"
#include "advasv/numcore/graph.hpp"
#include "advasv/stage.hpp"
#include "advasv/synthdata.hpp"

namespace advasv::attack {

struct AttackConfig {
  double epsilon = 0.3;
  std::size_t iterations = 5;
  // Step size; 0 selects epsilon / iterations.
  double alpha = 0.0;

  double StepSize() const;
  void Validate() const;
};

// Differentiable scorer S(enroll, test) exposed to the attacker. Enrollment is
// prepared once (EnrollFn) and enters the score as a constant.
class VictimPipeline {
 public:
  using EnrollFn = std::function<numcore::Tensor(const FeatureMatrix&)>;
  using ScoreFn =
      std::function<numcore::Var(numcore::Graph&, numcore::Var test, const numcore::Tensor& enrolled)>;

  VictimPipeline(EnrollFn enroll, ScoreFn score, std::string description);

  numcore::Tensor Enroll(const FeatureMatrix& x) const { return enroll_(x); }
  numcore::Var Score(numcore::Graph& g, numcore::Var test, const numcore::Tensor& enrolled) const {
    return score_(g, test, enrolled);
  }
  double Score(const numcore::Tensor& enrolled, const FeatureMatrix& test) const;
  // dS/dtest, T x C.
  FeatureMatrix Gradient(const numcore::Tensor& enrolled, const FeatureMatrix& test,
                         double* score = nullptr) const;

  const std::string& description() const { return description_; }

 private:
  EnrollFn enroll_;
  ScoreFn score_;
  std::string description_;
};

// Cosine score of asv(chain(test)) against asv(enroll). An empty chain is the
// bare system; a median filter (or any non-differentiable stage) is rejected.
VictimPipeline MakeVictim(std::shared_ptr<const asv::EmbeddingNet> net,
                          StageChain substitute = {});

// BIM with per-step clipping to the epsilon ball around `test`. Nontarget
// trials ascend the score, target trials descend it.
FeatureMatrix BimAttack(const VictimPipeline& victim, const numcore::Tensor& enrolled,
                        const FeatureMatrix& test, synth::TrialLabel label,
                        const AttackConfig& config);
FeatureMatrix BimAttack(const VictimPipeline& victim, const FeatureMatrix& enroll,
                        const FeatureMatrix& test, synth::TrialLabel label,
                        const AttackConfig& config);

// Adversarial test features, one per trial in trial order.
std::vector<FeatureMatrix> AttackTrialSet(const VictimPipeline& victim,
                                          std::span<const synth::Utterance> pool,
                                          const synth::TrialSet& trials,
                                          const AttackConfig& config,
                                          std::size_t threads = 1);

}  // namespace advasv::attack
