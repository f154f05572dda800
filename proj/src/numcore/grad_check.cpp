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

#include "advasv/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "advasv/error.hpp"
#include "advasv/rng.hpp"

namespace advasv::numcore {

namespace {
double Evaluate(const ScalarFunction& f, const Tensor& point) {
  Graph g;
  Var x = g.Constant(point);
  Var y = f(g, x);
  return y.value().item();
}
}  // namespace

GradCheckResult GradCheck(const ScalarFunction& f, const Tensor& point,
                          const GradCheckOptions& options) {
  if (!(options.h > 0.0)) throw ValidationError("grad_check: h must be positive");
  std::vector<double> analytic;
  {
    Graph g;
    Var x = g.Input(point);
    Var y = f(g, x);
    g.Backward(y);
    auto gx = g.grad(x);
    analytic.assign(gx.begin(), gx.end());
  }
  std::vector<std::size_t> coords(point.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (options.max_coords > 0 && options.max_coords < coords.size()) {
    Rng rng(options.seed);
    for (std::size_t i = 0; i < options.max_coords; ++i) {
      std::swap(coords[i], coords[i + rng.Below(coords.size() - i)]);
    }
    coords.resize(options.max_coords);
  }
  GradCheckResult result;
  const double h = options.h;
  Tensor probe = point;
  for (std::size_t idx : coords) {
    const double x0 = point[idx];
    auto at = [&](double offset) {
      probe[idx] = x0 + offset;
      return Evaluate(f, probe);
    };
    // Differences first, so a flat direction gives exactly zero.
    const double d1 = at(h) - at(-h);
    const double d2 = at(2 * h) - at(-2 * h);
    const double numeric = (8.0 * d1 - d2) / (12.0 * h);
    probe[idx] = x0;
    const double a = analytic[idx];
    const double err =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (err >= result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = idx;
      result.analytic = a;
      result.numeric = numeric;
    }
  }
  return result;
}

}  // namespace advasv::numcore
