#pragma once

// Dense row-major tensors (rank <= 3) with tape-free reverse-mode autodiff.
//
// Every op returns a fresh node holding shared references to its inputs, so
// the recorded computation is an implicit DAG rooted at the loss. Graph::trace
// linearizes that DAG into topological order; backward() walks it once in
// reverse. Leaf gradients accumulate across backward() calls until
// zero_grad(); intermediate gradients are reset at the start of every pass.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "emohead/errors.hpp"

namespace emohead {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
class BasicTensor;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return inputs.empty(); }

  std::span<T> grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T{0});
    return grad;
  }
};

inline void check_shape(const Shape& shape) {
  if (shape.size() > 3) {
    throw DimensionError("tensor rank " + std::to_string(shape.size()) +
                         " exceeds 3");
  }
}

}  // namespace detail

template <typename T>
class Graph;

template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  BasicTensor() : node_(std::make_shared<detail::Node<T>>()) {
    node_->shape = {0};
  }

  BasicTensor(Shape shape, std::vector<T> values, bool requires_grad = false)
      : node_(std::make_shared<detail::Node<T>>()) {
    detail::check_shape(shape);
    if (shape_numel(shape) != values.size()) {
      throw DimensionError("shape " + shape_str(shape) + " needs " +
                           std::to_string(shape_numel(shape)) +
                           " values, got " + std::to_string(values.size()));
    }
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    set_requires_grad(requires_grad);
  }

  static BasicTensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = shape_numel(shape);
    return BasicTensor(std::move(shape), std::vector<T>(n, T{0}),
                       requires_grad);
  }

  static BasicTensor full(Shape shape, T v, bool requires_grad = false) {
    const auto n = shape_numel(shape);
    return BasicTensor(std::move(shape), std::vector<T>(n, v), requires_grad);
  }

  static BasicTensor scalar(T v, bool requires_grad = false) {
    return BasicTensor({1}, {v}, requires_grad);
  }

  static BasicTensor vector(std::vector<T> values, bool requires_grad = false) {
    const auto n = values.size();
    return BasicTensor({n}, std::move(values), requires_grad);
  }

  // Builds the output node of a differentiable op. The node requires grad
  // iff any input does; otherwise the backward closure is dropped.
  static BasicTensor from_op(std::string op, Shape shape,
                             std::vector<T> values,
                             std::vector<BasicTensor> inputs,
                             std::function<void(detail::Node<T>&)> backward) {
    for (const T v : values) {
      if (!std::isfinite(v)) {
        throw NumericError(op + " produced a non-finite value");
      }
    }
    BasicTensor out(std::move(shape), std::move(values));
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      auto& node = *out.node_;
      node.op = std::move(op);
      node.requires_grad = true;
      node.backward = std::move(backward);
      node.inputs.reserve(inputs.size());
      for (auto& in : inputs) node.inputs.push_back(in.node_);
    }
    return out;
  }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->value.size(); }
  bool empty() const { return numel() == 0; }

  std::span<const T> data() const { return node_->value; }
  // Direct write access, meant for leaves such as parameters and inputs.
  std::span<T> mutable_data() { return node_->value; }
  T operator[](std::size_t i) const { return node_->value[i]; }

  T item() const {
    if (numel() != 1) {
      throw ContractError("item() on tensor of shape " + shape_str(shape()));
    }
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  BasicTensor& set_requires_grad(bool on) {
    node_->requires_grad = on;
    if (on) {
      node_->grad.assign(node_->value.size(), T{0});
    } else {
      node_->grad.clear();
    }
    return *this;
  }

  // Empty span when the tensor does not require grad.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  void zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), T{0});
  }

  bool is_leaf() const { return node_->is_leaf(); }
  const std::string& op() const { return node_->op; }

  // Deep copy of the values as a new leaf with no history.
  BasicTensor detach() const {
    return BasicTensor(shape(), node_->value);
  }

  // Same values in another precision, as a leaf.
  template <typename U>
  BasicTensor<U> cast(bool requires_grad = false) const {
    std::vector<U> values(node_->value.begin(), node_->value.end());
    return BasicTensor<U>(shape(), std::move(values), requires_grad);
  }

  void backward() const;

  bool same_node(const BasicTensor& other) const {
    return node_ == other.node_;
  }

 private:
  friend class Graph<T>;
  NodePtr node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Topologically ordered view of the nodes feeding a root that require grad.
template <typename T>
class Graph {
 public:
  static Graph trace(const BasicTensor<T>& root) {
    Graph g;
    if (!root.requires_grad()) return g;
    std::unordered_set<const detail::Node<T>*> seen;
    // Iterative post-order DFS; inputs always land before consumers.
    std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.node_.get(), 0);
    seen.insert(root.node_.get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        detail::Node<T>* child = node->inputs[next++].get();
        if (child->requires_grad && seen.insert(child).second) {
          stack.emplace_back(child, 0);
        }
      } else {
        g.order_.push_back(node);
        stack.pop_back();
      }
    }
    return g;
  }

  std::size_t size() const { return order_.size(); }

  std::vector<std::string> op_sequence() const {
    std::vector<std::string> ops;
    ops.reserve(order_.size());
    for (const auto* n : order_) ops.push_back(n->op);
    return ops;
  }

  // Seeds d(root)/d(root) = 1 and propagates once through every node.
  void backward() {
    if (order_.empty()) return;
    detail::Node<T>* root = order_.back();
    if (root->value.size() != 1) {
      throw ContractError("backward() needs a scalar loss, got shape " +
                          shape_str(root->shape));
    }
    for (auto* n : order_) {
      if (!n->is_leaf()) n->grad.assign(n->value.size(), T{0});
    }
    if (root->is_leaf()) {
      root->grad_buffer()[0] += T{1};
      return;
    }
    root->grad[0] = T{1};
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      detail::Node<T>* n = *it;
      if (!n->is_leaf() && n->backward) n->backward(*n);
    }
  }

 private:
  std::vector<detail::Node<T>*> order_;
};

template <typename T>
void BasicTensor<T>::backward() const {
  if (numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_str(shape()));
  }
  Graph<T>::trace(*this).backward();
}

}  // namespace emohead
