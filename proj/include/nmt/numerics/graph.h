/* desknmt - a desk-scale neural machine translation research toolkit.
 * Copyright (C) 2026 The desknmt Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "nmt/numerics/parameter.h"
#include "nmt/numerics/tensor.h"

namespace nmt::num {

struct NodeId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const { return index != UINT32_MAX; }
  friend bool operator==(NodeId, NodeId) = default;
};

// Tape of operations in creation order, which is a topological order because
// a node can only reference nodes that already exist. Built and consumed by a
// single worker. With recording off the graph only evaluates values.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, NodeId self)>;

  explicit Graph(bool record_backward = true) : record_(record_backward) {}

  NodeId constant(Tensor value);
  // Leaf referencing a parameter's value; repeated calls return the same node.
  NodeId parameter(const Parameter& p);
  // Free leaf that receives a gradient (not tied to any ParamStore).
  NodeId variable(Tensor value);

  NodeId record(const char* op, Tensor value, std::initializer_list<NodeId> inputs,
                BackwardFn backward);
  NodeId record(const char* op, Tensor value, const std::vector<NodeId>& inputs,
                BackwardFn backward);

  const Tensor& value(NodeId id) const;
  bool needs_grad(NodeId id) const { return nodes_[id.index].needs_grad; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }
  const char* op(NodeId id) const { return nodes_[id.index].op; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_[id.index].inputs; }

  // Gradient accumulated so far; nullptr if the node was never reached.
  const Tensor* grad(NodeId id) const;
  // Zero-initialised on first access; only call for nodes with needs_grad.
  Tensor& grad_buffer(NodeId id);

  std::string describe(NodeId id) const;

 private:
  friend GradientMap backward(Graph& graph, NodeId scalar_output);

  struct Node {
    const char* op = "";
    Tensor own;
    const Tensor* ref = nullptr;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    const Parameter* param = nullptr;
    bool needs_grad = false;
    bool has_grad = false;
    Tensor grad;
  };

  NodeId push(Node node);

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, NodeId> param_nodes_;
};

// Reverse-mode sweep from a 0-dimensional output. Returns dL/dp for every
// parameter leaf in the graph with requires_grad; leaves the output does not
// depend on receive zeros. Throws NumericError naming the first node whose
// value or gradient is not finite.
GradientMap backward(Graph& graph, NodeId scalar_output);

// Sum of two gradient maps (keys unioned).
GradientMap add_gradients(const GradientMap& a, const GradientMap& b);

}  // namespace nmt::num
