#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "pla/common.hpp"

namespace pla {

// Reverse-mode node. Graphs are rebuilt per step (define-by-run); a node
// holds its forward value, the accumulated gradient, and a closure that
// pushes the gradient into its parents.
template <class T>
struct Node {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::size_t size() const { return value.size(); }
};

inline std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d > 0, ErrorCode::shape, "tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

template <class T>
class DiffTensor {
 public:
  DiffTensor() = default;
  explicit DiffTensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static DiffTensor leaf(std::vector<int> shape, std::vector<T> value,
                         bool requires_grad = false) {
    require(shape_numel(shape) == value.size(), ErrorCode::shape,
            "leaf: shape does not match number of elements");
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return DiffTensor(n);
  }
  static DiffTensor zeros(std::vector<int> shape, bool requires_grad = false) {
    std::size_t n = shape_numel(shape);
    return leaf(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
  }
  static DiffTensor full(std::vector<int> shape, T v,
                         bool requires_grad = false) {
    std::size_t n = shape_numel(shape);
    return leaf(std::move(shape), std::vector<T>(n, v), requires_grad);
  }

  bool valid() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  std::vector<T>& data() { return node_->value; }
  const std::vector<T>& data() const { return node_->value; }
  std::vector<T>& grad() { return node_->grad; }
  const std::vector<T>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t size() const { return node_->value.size(); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }

  T scalar() const {
    require(size() == 1, ErrorCode::shape, "scalar() on non-scalar tensor");
    return node_->value[0];
  }

  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  // Backpropagate from a scalar output through the recorded graph.
  void backward() const {
    require(size() == 1, ErrorCode::shape, "backward() requires scalar output");
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    // Iterative post-order DFS over parents.
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      if (i < n->parents.size()) {
        Node<T>* p = n->parents[i].get();
        ++i;
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    for (Node<T>* n : order) n->grad.assign(n->value.size(), T(0));
    node_->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->backward) (*it)->backward(**it);
    }
  }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <class T>
DiffTensor<T> make_op(std::vector<int> shape, std::vector<T> value,
                      std::vector<std::shared_ptr<Node<T>>> parents,
                      std::function<void(Node<T>&)> backward) {
  require(shape_numel(shape) == value.size(), ErrorCode::shape,
          "op output shape mismatch");
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backward = std::move(backward);
  return DiffTensor<T>(n);
}

}  // namespace pla
