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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advasv/features.hpp"
#include "advasv/numcore/graph.hpp"

namespace advasv {

// One purification step placed in front of the ASV scorer: a reconstruction
// cascade or a hand-crafted filter. Stages are frozen and shared.
class Stage {
 public:
  virtual ~Stage() = default;

  virtual std::string name() const = 0;
  virtual bool differentiable() const = 0;
  virtual FeatureMatrix Apply(const FeatureMatrix& x) const = 0;
  // Graph form; only differentiable stages implement it.
  virtual numcore::Var Apply(numcore::Graph& g, numcore::Var x) const;
};

using StagePtr = std::shared_ptr<const Stage>;
using StageChain = std::vector<StagePtr>;

FeatureMatrix ApplyChain(std::span<const StagePtr> chain, const FeatureMatrix& x);
numcore::Var ApplyChain(std::span<const StagePtr> chain, numcore::Graph& g,
                        numcore::Var x);
std::string DescribeChain(std::span<const StagePtr> chain);

}  // namespace advasv
