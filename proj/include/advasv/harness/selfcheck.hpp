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
#include <string>
#include <vector>

#include "advasv/metrics.hpp"
#include "advasv/numcore/grad_check.hpp"

namespace advasv::harness {

// A scalar function of one input tensor, rebuilt per seed so that the probe
// point and any fixed operands vary with it.
struct GradCase {
  std::string name;
  std::function<numcore::Tensor(std::uint64_t seed)> point;
  std::function<numcore::ScalarFunction(std::uint64_t seed)> function;
  // Coordinates probed per seed; 0 probes all.
  std::size_t max_coords = 0;
};

// One case per differentiable op (and per differentiable operand where ops
// take several), the linear filters, the recon net, the embedding net and the
// aware-attacker victim pipeline.
std::vector<GradCase> GradCases();

// Deliberately wrong backward rule, used as a negative control.
GradCase CorruptedGradCase();

// O(n^2) sweep over every candidate threshold, written independently of the
// sorted sweep in metrics.
double BruteForceEer(const metrics::ScoredTrials& st);
double BruteForceMinDcf(const metrics::ScoredTrials& st, const metrics::DcfParams& p = {});

// Random score set with `n` trials; `ties` quantizes scores onto a coarse grid.
metrics::ScoredTrials RandomScoreSet(std::size_t n, bool ties, std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckOptions {
  std::size_t grad_seeds = 5;
  std::size_t metric_sets = 200;
  bool corrupt_gradient = false;
};

std::vector<CheckResult> RunSelfCheck(const SelfCheckOptions& options = {});

}  // namespace advasv::harness
