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

#include "advasv/attack.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "advasv/error.hpp"
#include "advasv/numcore/ops.hpp"
#include "advasv/parallel.hpp"

namespace advasv::attack {

namespace nc = numcore;

double AttackConfig::StepSize() const {
  return alpha > 0.0 ? alpha : epsilon / static_cast<double>(iterations);
}

void AttackConfig::Validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("attack: epsilon must be finite and >= 0");
  }
  if (iterations < 1) throw ValidationError("attack: iterations must be >= 1");
  if (!(alpha >= 0.0) || alpha > epsilon) {
    throw ValidationError("attack: alpha must lie in (0, epsilon]");
  }
}

VictimPipeline::VictimPipeline(EnrollFn enroll, ScoreFn score, std::string description)
    : enroll_(std::move(enroll)), score_(std::move(score)),
      description_(std::move(description)) {
  if (!enroll_ || !score_) throw ValidationError("victim: missing enroll or score function");
}

double VictimPipeline::Score(const nc::Tensor& enrolled, const FeatureMatrix& test) const {
  nc::Graph g;
  return score_(g, g.Constant(test.ToTensor()), enrolled).value().item();
}

FeatureMatrix VictimPipeline::Gradient(const nc::Tensor& enrolled, const FeatureMatrix& test,
                                       double* score) const {
  nc::Graph g;
  nc::Var x = g.Input(test.ToTensor());
  nc::Var s = score_(g, x, enrolled);
  if (score != nullptr) *score = s.value().item();
  FeatureMatrix grad(test.frames(), test.channels());
  // A score that does not depend on the input has zero gradient.
  if (!g.requires_grad(s)) return grad;
  g.Backward(s);
  auto src = g.grad(x);
  std::copy(src.begin(), src.end(), grad.values().begin());
  return grad;
}

VictimPipeline MakeVictim(std::shared_ptr<const asv::EmbeddingNet> net, StageChain substitute) {
  if (!net) throw ValidationError("make_victim: missing ASV network");
  for (const auto& stage : substitute) {
    if (!stage) throw ValidationError("make_victim: null stage");
    if (!stage->differentiable()) {
      throw ValidationError("make_victim: stage '" + stage->name() +
                            "' is not differentiable");
    }
  }
  std::string description = DescribeChain(substitute);
  auto enroll = [net](const FeatureMatrix& x) { return net->Embed(x); };
  auto score = [net, substitute](nc::Graph& g, nc::Var test, const nc::Tensor& enrolled) {
    nc::Var purified = ApplyChain(substitute, g, test);
    nc::Var e = net->Embed(net->Bind(g, false), purified);
    return nc::CosineSimilarity(g.Constant(enrolled), e);
  };
  return VictimPipeline(enroll, score, description);
}

FeatureMatrix BimAttack(const VictimPipeline& victim, const nc::Tensor& enrolled,
                        const FeatureMatrix& test, synth::TrialLabel label,
                        const AttackConfig& config) {
  config.Validate();
  const double eps = config.epsilon;
  const double step = (label == synth::TrialLabel::kTarget ? -1.0 : 1.0) * config.StepSize();
  FeatureMatrix x = test;
  if (eps == 0.0) return x;
  for (std::size_t n = 0; n < config.iterations; ++n) {
    const FeatureMatrix grad = victim.Gradient(enrolled, x);
    if (!grad.AllFinite()) {
      throw NumericalError("bim_attack: non-finite gradient at iteration " + std::to_string(n));
    }
    auto xv = x.values();
    const auto g = grad.values();
    const auto orig = test.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double sign = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
      xv[i] = std::clamp(xv[i] + step * sign, orig[i] - eps, orig[i] + eps);
    }
  }
  return x;
}

FeatureMatrix BimAttack(const VictimPipeline& victim, const FeatureMatrix& enroll,
                        const FeatureMatrix& test, synth::TrialLabel label,
                        const AttackConfig& config) {
  return BimAttack(victim, victim.Enroll(enroll), test, label, config);
}

std::vector<FeatureMatrix> AttackTrialSet(const VictimPipeline& victim,
                                          std::span<const synth::Utterance> pool,
                                          const synth::TrialSet& trials,
                                          const AttackConfig& config, std::size_t threads) {
  config.Validate();
  std::map<std::size_t, std::size_t> slot;
  for (const auto& t : trials.trials) {
    if (t.enroll >= pool.size() || t.test >= pool.size()) {
      throw ValidationError("attack_trialset: trial references utterance outside pool");
    }
    slot.emplace(t.enroll, 0);
  }
  std::vector<std::size_t> ids;
  for (auto& [id, s] : slot) {
    s = ids.size();
    ids.push_back(id);
  }
  std::vector<nc::Tensor> enrolled(ids.size());
  ParallelFor(ids.size(), threads,
              [&](std::size_t i) { enrolled[i] = victim.Enroll(pool[ids[i]].features); });

  std::vector<FeatureMatrix> out(trials.size());
  ParallelFor(trials.size(), threads, [&](std::size_t i) {
    const synth::Trial& t = trials.trials[i];
    try {
      out[i] = BimAttack(victim, enrolled[slot.at(t.enroll)], pool[t.test].features, t.label,
                         config);
    } catch (const NumericalError& e) {
      throw NumericalError("trial " + std::to_string(i) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("trial " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace advasv::attack
