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

#include "advasv/numcore/graph.hpp"

#include "advasv/error.hpp"

namespace advasv::numcore {

Var Graph::Append(Node node) {
  if (!node.out.AllFinite()) {
    throw NumericalError(node.op + " produced a non-finite value");
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::Input(Tensor value) {
  Node n;
  n.op = "input";
  n.out = std::move(value);
  n.requires_grad = true;
  return Append(std::move(n));
}

Var Graph::Constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.out = std::move(value);
  return Append(std::move(n));
}

Var Graph::Record(std::string_view op, std::vector<Var> inputs, Tensor out,
                  BackwardFn backward) {
  Node n;
  n.op = std::string(op);
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (!v.valid() || &v.graph() != this) {
      throw ValidationError(n.op + ": input belongs to a different graph");
    }
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  n.out = std::move(out);
  if (n.requires_grad) n.backward = std::move(backward);
  return Append(std::move(n));
}

void Graph::Backward(Var seed) {
  if (!seed.valid() || &seed.graph() != this) {
    throw ValidationError("backward: seed belongs to a different graph");
  }
  const std::uint32_t last = seed.id();
  if (nodes_[last].out.size() != 1) {
    throw ValidationError("backward: seed must be scalar, got shape " +
                          ShapeToString(nodes_[last].out.shape()));
  }
  for (Node& n : nodes_) {
    if (n.requires_grad) {
      n.out.ZeroGrad();
    } else {
      n.out.DropGrad();
    }
  }
  if (!nodes_[last].requires_grad) return;
  nodes_[last].out.grad()[0] = 1.0;
  for (std::uint32_t i = last + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
}

}  // namespace advasv::numcore
