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

#include "advasv/numcore/optim.hpp"

#include <cmath>
#include <string>

#include "advasv/error.hpp"

namespace advasv::numcore {

double WarmupLinearSchedule::RateAt(std::int64_t step) const {
  const double total = static_cast<double>(total_steps);
  const double warmup = warmup_fraction * total;
  const double s = static_cast<double>(step);
  if (s <= 0.0) return 0.0;
  if (s >= total) return 0.0;
  if (warmup > 0.0 && s <= warmup) return peak * s / warmup;
  return peak * (total - s) / (total - warmup);
}

Adam::Adam(WarmupLinearSchedule schedule, AdamHyperParams hp) {
  if (schedule.total_steps < 1) {
    throw ValidationError("adam: total_steps must be >= 1");
  }
  if (!(schedule.warmup_fraction >= 0.0) || !(schedule.warmup_fraction < 1.0)) {
    throw ValidationError("adam: warmup_fraction must lie in [0, 1)");
  }
  state_.schedule = schedule;
  state_.adam = hp;
}

void Adam::Step(std::span<Tensor* const> params, std::int64_t step) {
  if (step != state_.step + 1) {
    throw ValidationError("adam: step " + std::to_string(step) +
                          " does not follow " + std::to_string(state_.step));
  }
  if (state_.first_moment.empty()) {
    for (const Tensor* p : params) {
      state_.first_moment.emplace_back(p->size(), 0.0);
      state_.second_moment.emplace_back(p->size(), 0.0);
    }
  }
  if (state_.first_moment.size() != params.size()) {
    throw ValidationError("adam: parameter count changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (p.size() != state_.first_moment[i].size()) {
      throw ValidationError("adam: parameter " + std::to_string(i) +
                            " changed shape to " + ShapeToString(p.shape()));
    }
    if (!p.has_grad()) {
      throw ValidationError("adam: parameter " + std::to_string(i) +
                            " has no gradient slot");
    }
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        throw NumericalError("adam: non-finite gradient in parameter " +
                             std::to_string(i) + " at step " + std::to_string(step));
      }
    }
  }
  state_.step = step;
  const auto& hp = state_.adam;
  const double lr = state_.schedule.RateAt(step);
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto g = p.grad();
    auto& m = state_.first_moment[i];
    auto& v = state_.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * g[j];
      v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
  }
}

}  // namespace advasv::numcore
