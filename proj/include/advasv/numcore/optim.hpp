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
#include <span>
#include <vector>

#include "advasv/numcore/tensor.hpp"

namespace advasv::numcore {

// Linear warmup to `peak` over the first `warmup_fraction` of `total_steps`,
// then linear decay reaching 0 at the final step. Steps are 1-based.
struct WarmupLinearSchedule {
  double peak = 1e-3;
  double warmup_fraction = 0.07;
  std::int64_t total_steps = 1;

  double RateAt(std::int64_t step) const;
};

struct AdamHyperParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step = 0;
  WarmupLinearSchedule schedule;
  AdamHyperParams adam;
};

// Adam with bias correction. Reads gradients from each parameter's grad
// slot. `step` must be exactly state.step + 1; non-finite gradients reject
// the whole update and leave parameters untouched.
class Adam {
 public:
  explicit Adam(WarmupLinearSchedule schedule, AdamHyperParams hp = {});

  void Step(std::span<Tensor* const> params, std::int64_t step);
  // Steps with the next step index.
  void Step(std::span<Tensor* const> params) { Step(params, state_.step + 1); }

  const OptimizerState& state() const { return state_; }
  double CurrentRate() const { return state_.schedule.RateAt(state_.step); }

 private:
  OptimizerState state_;
};

}  // namespace advasv::numcore
