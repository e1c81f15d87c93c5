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

#include "nmt/numerics/graph.h"

#include "nmt/error.h"

namespace nmt::num {

NodeId Graph::push(Node node) {
  if (node.ref == nullptr && !node.own.all_finite()) {
    throw NumericError("non-finite value produced by node #" + std::to_string(nodes_.size()) +
                       " (" + node.op + ")");
  }
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Graph::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.own = std::move(value);
  return push(std::move(n));
}

NodeId Graph::parameter(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return it->second;
  Node n;
  n.op = "parameter";
  n.ref = &p.value;
  n.param = &p;
  n.needs_grad = record_ && p.requires_grad;
  if (!p.value.all_finite()) throw NumericError("parameter '" + p.name + "' is not finite");
  NodeId id = push(std::move(n));
  param_nodes_.emplace(&p, id);
  return id;
}

NodeId Graph::variable(Tensor value) {
  Node n;
  n.op = "variable";
  n.own = std::move(value);
  n.needs_grad = record_;
  return push(std::move(n));
}

NodeId Graph::record(const char* op, Tensor value, std::initializer_list<NodeId> inputs,
                     BackwardFn backward) {
  return record(op, std::move(value), std::vector<NodeId>(inputs), std::move(backward));
}

NodeId Graph::record(const char* op, Tensor value, const std::vector<NodeId>& inputs,
                     BackwardFn backward) {
  Node n;
  n.op = op;
  n.own = std::move(value);
  if (record_) {
    for (NodeId in : inputs) {
      if (nodes_[in.index].needs_grad) n.needs_grad = true;
    }
    if (n.needs_grad) {
      n.inputs = inputs;
      n.backward = std::move(backward);
    }
  }
  return push(std::move(n));
}

const Tensor& Graph::value(NodeId id) const {
  const Node& n = nodes_[id.index];
  return n.ref ? *n.ref : n.own;
}

const Tensor* Graph::grad(NodeId id) const {
  const Node& n = nodes_[id.index];
  return n.has_grad ? &n.grad : nullptr;
}

Tensor& Graph::grad_buffer(NodeId id) {
  Node& n = nodes_[id.index];
  if (!n.has_grad) {
    n.grad = Tensor(value(id).shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

std::string Graph::describe(NodeId id) const {
  const Node& n = nodes_[id.index];
  std::string s = "node #" + std::to_string(id.index) + " (" + n.op;
  if (n.param) s += " '" + n.param->name + "'";
  return s + ")";
}

GradientMap backward(Graph& graph, NodeId out) {
  const Tensor& v = graph.value(out);
  if (v.rank() != 0) {
    throw Error("backward() needs a 0-dimensional output, got shape " + shape_string(v.shape()));
  }
  GradientMap result;
  if (graph.needs_grad(out)) {
    graph.grad_buffer(out)[0] = 1.0;
    for (std::uint32_t i = out.index + 1; i-- > 0;) {
      NodeId id{i};
      auto& node = graph.nodes_[i];
      if (!node.needs_grad || !node.has_grad) continue;
      if (!graph.value(id).all_finite()) {
        throw NumericError("non-finite value at " + graph.describe(id));
      }
      if (!node.grad.all_finite()) {
        throw NumericError("non-finite gradient at " + graph.describe(id));
      }
      if (node.backward) node.backward(graph, id);
    }
  }
  for (std::size_t i = 0; i < graph.nodes_.size(); ++i) {
    const auto& node = graph.nodes_[i];
    if (!node.param || !node.param->requires_grad || !graph.recording()) continue;
    result[node.param] = node.has_grad ? node.grad : Tensor(node.param->value.shape(), 0.0);
  }
  return result;
}

GradientMap add_gradients(const GradientMap& a, const GradientMap& b) {
  GradientMap out = a;
  for (const auto& [p, g] : b) {
    auto it = out.find(p);
    if (it == out.end()) {
      out.emplace(p, g);
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }
  return out;
}

}  // namespace nmt::num
