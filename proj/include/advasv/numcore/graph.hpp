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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advasv/numcore/tensor.hpp"

namespace advasv::numcore {

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the owning
// graph is alive.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  std::uint32_t id() const { return id_; }
  Graph& graph() const { return *graph_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

// Reverse-mode expression graph. Nodes are appended in evaluation order, so
// the node list is always a topological order and Backward() is a single
// reverse sweep.
//
// A node requires a gradient when it is an Input() or when any of its inputs
// does; backward closures are only stored for such nodes, which makes
// inference-only graphs (all leaves Constant()) cheap.
class Graph {
 public:
  // Called during Backward() with the id of the node being visited. The
  // closure reads Grad(self) and accumulates into MutableGrad(input).
  using BackwardFn = std::function<void(Graph&, std::uint32_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Input(Tensor value);
  Var Constant(Tensor value);

  // Appends an operation node. `backward` may be empty for operations with
  // no differentiable inputs.
  Var Record(std::string_view op, std::vector<Var> inputs, Tensor out,
             BackwardFn backward);

  // Zeroes every gradient slot, seeds the scalar `seed` with 1 and
  // propagates in reverse creation order. Nodes created after the seed are
  // not visited.
  void Backward(Var seed);

  const Tensor& value(Var v) const { return nodes_[v.id()].out; }
  // Gradient of the last Backward() seed with respect to `v`; empty when `v`
  // does not require a gradient.
  std::span<const double> grad(Var v) const { return nodes_[v.id()].out.grad(); }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  const std::string& op_name(Var v) const { return nodes_[v.id()].op; }
  std::size_t size() const { return nodes_.size(); }

  // Accessors for backward closures, addressed by node id.
  const Tensor& Value(std::uint32_t id) const { return nodes_[id].out; }
  std::span<const double> Grad(std::uint32_t id) const {
    return nodes_[id].out.grad();
  }
  // Empty when node `id` does not require a gradient; closures skip it then.
  std::span<double> MutableGrad(std::uint32_t id) {
    return nodes_[id].out.grad();
  }
  const std::vector<std::uint32_t>& Inputs(std::uint32_t id) const {
    return nodes_[id].inputs;
  }

 private:
  struct Node {
    std::string op;
    std::vector<std::uint32_t> inputs;
    Tensor out;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var Append(Node node);

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph_->value(*this); }

}  // namespace advasv::numcore
