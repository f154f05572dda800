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

#include "advasv/stage.hpp"

#include "advasv/error.hpp"

namespace advasv {

numcore::Var Stage::Apply(numcore::Graph&, numcore::Var) const {
  throw ValidationError("stage '" + name() + "' is not differentiable");
}

FeatureMatrix ApplyChain(std::span<const StagePtr> chain, const FeatureMatrix& x) {
  FeatureMatrix out = x;
  for (const StagePtr& s : chain) out = s->Apply(out);
  return out;
}

numcore::Var ApplyChain(std::span<const StagePtr> chain, numcore::Graph& g,
                        numcore::Var x) {
  for (const StagePtr& s : chain) x = s->Apply(g, x);
  return x;
}

std::string DescribeChain(std::span<const StagePtr> chain) {
  if (chain.empty()) return "none";
  std::string out;
  for (const StagePtr& s : chain) {
    if (!out.empty()) out += " -> ";
    out += s->name();
  }
  return out;
}

}  // namespace advasv
