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
#include <functional>

#include "advasv/numcore/graph.hpp"

namespace advasv::numcore {

// Builds a scalar expression of `x` inside `g`.
using ScalarFunction = std::function<Var(Graph& g, Var x)>;

struct GradCheckOptions {
  double h = 1e-4;
  // Number of coordinates to probe; 0 probes every coordinate. Probed
  // coordinates are drawn without replacement from `seed`.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares the reverse-mode gradient of `f` at `point` against the
// fourth-order central difference
//   (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / 12h
// coordinate-wise, with relative error |a-b| / max(|a|, |b|, 1e-8).
GradCheckResult GradCheck(const ScalarFunction& f, const Tensor& point,
                          const GradCheckOptions& options = {});

inline double MaxRelativeGradError(const ScalarFunction& f, const Tensor& point,
                                   double h) {
  return GradCheck(f, point, {.h = h}).max_relative_error;
}

}  // namespace advasv::numcore
