// Copyright 2026 The bevplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BEVPLAN_TENSOR_HPP_
#define BEVPLAN_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace bevplan::ad
{

inline std::size_t shape_numel(const std::vector<int> & shape)
{
  std::size_t n = 1;
  for (int d : shape) {
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

inline std::string shape_string(const std::vector<int> & shape)
{
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s += std::to_string(shape[i]);
    if (i + 1 < shape.size()) {
      s += ",";
    }
  }
  return s + "]";
}

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape. Parents are held by shared_ptr so a
/// live handle to any downstream tensor keeps the subgraph it needs alive.
struct Node
{
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad{false};
  std::vector<NodePtr> parents;
  std::function<void(Node &)> backward;

  std::size_t numel() const { return value.size(); }

  void ensure_grad()
  {
    if (grad.size() != value.size()) {
      grad.assign(value.size(), 0.0);
    }
  }
};

/// Value-semantics handle to a graph node.
class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor leaf(std::vector<int> shape, std::vector<double> value, bool requires_grad = false)
  {
    if (shape_numel(shape) != value.size()) {
      throw std::invalid_argument("tensor leaf: shape does not match value count");
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false)
  {
    const std::size_t n = shape_numel(shape);
    return leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int> & shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return node_->numel(); }
  const std::vector<double> & value() const { return node_->value; }
  std::vector<double> & mutable_value() { return node_->value; }
  const std::vector<double> & grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  double scalar() const
  {
    if (node_->numel() != 1) {
      throw std::invalid_argument("scalar() on tensor of shape " + shape_string(node_->shape));
    }
    return node_->value[0];
  }

  NodePtr node() const { return node_; }

private:
  NodePtr node_;
};

namespace graph_detail
{
inline void topo_visit(Node * n, std::unordered_set<Node *> & seen, std::vector<Node *> & order)
{
  // Iterative post-order DFS; child visit order is the parent list order,
  // so the schedule is deterministic.
  struct Frame
  {
    Node * node;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({n, 0});
  seen.insert(n);
  while (!stack.empty()) {
    Frame & f = stack.back();
    if (f.next < f.node->parents.size()) {
      Node * p = f.node->parents[f.next++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
}
}  // namespace graph_detail

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into each
/// reachable node's grad buffer (leaves included).
inline void backward(const Tensor & loss)
{
  Node * root = loss.node().get();
  if (root == nullptr || root->numel() != 1) {
    throw std::invalid_argument("backward: loss must be a defined scalar");
  }
  if (!root->requires_grad) {
    throw std::invalid_argument("backward: loss does not require grad");
  }
  std::unordered_set<Node *> seen;
  std::vector<Node *> order;
  graph_detail::topo_visit(root, seen, order);
  for (Node * n : order) {
    n->ensure_grad();
    // Untracked parents still need buffers; pullbacks may write to them.
    for (auto & p : n->parents) {
      p->ensure_grad();
    }
  }
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node * n = *it;
    if (n->backward) {
      n->backward(*n);
    }
  }
}

/// Helper for op implementations: build the result node, wiring parents and
/// the pullback only when some input is tracked.
inline Tensor make_op(std::vector<int> shape, std::vector<double> value,
                      std::vector<Tensor> inputs, std::function<void(Node &)> pullback)
{
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool track = false;
  for (const auto & t : inputs) {
    track = track || t.node()->requires_grad;
  }
  if (track) {
    n->requires_grad = true;
    n->parents.reserve(inputs.size());
    for (auto & t : inputs) {
      n->parents.push_back(t.node());
    }
    n->backward = std::move(pullback);
  }
  return Tensor(std::move(n));
}

}  // namespace bevplan::ad

#endif  // BEVPLAN_TENSOR_HPP_
