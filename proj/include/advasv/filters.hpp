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
#include <string>
#include <vector>

#include "advasv/features.hpp"
#include "advasv/numcore/graph.hpp"
#include "advasv/stage.hpp"

namespace advasv::filters {

enum class FilterKind { kGaussian, kMedian, kMean };

std::string ToString(FilterKind kind);
FilterKind ParseFilterKind(const std::string& name);

// Square window over the T x C plane with replicated borders.
struct FilterSpec {
  FilterKind kind = FilterKind::kGaussian;
  std::size_t window = 3;
  double sigma = 1.0;  // gaussian only

  void Validate() const;
  std::string Name() const;
};

// exp(-k^2 / (2 sigma^2)) for k = -r..r, renormalized to sum to 1.
std::vector<double> GaussianKernel(std::size_t window, double sigma);

FeatureMatrix ApplyFilter(const FilterSpec& spec, const FeatureMatrix& x);

// Graph form for the linear kinds (gaussian, mean).
numcore::Var ApplyFilter(const FilterSpec& spec, numcore::Graph& g, numcore::Var x);

class FilterStage : public Stage {
 public:
  explicit FilterStage(FilterSpec spec);

  std::string name() const override { return spec_.Name(); }
  bool differentiable() const override { return spec_.kind != FilterKind::kMedian; }
  FeatureMatrix Apply(const FeatureMatrix& x) const override;
  numcore::Var Apply(numcore::Graph& g, numcore::Var x) const override;

  const FilterSpec& spec() const { return spec_; }

 private:
  FilterSpec spec_;
};

}  // namespace advasv::filters
