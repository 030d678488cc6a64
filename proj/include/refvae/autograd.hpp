#pragma once

#include "refvae/tensor.hpp"

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

namespace refvae {

template <typename S>
struct Node {
  Tensor<S> value;
  MatrixX<S> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const MatrixX<S>& delta) {
    if (grad.size() == 0) {
      grad = delta;
    } else {
      grad += delta;
    }
  }

  bool has_grad() const { return grad.size() != 0; }
};

/// Handle to a node of a reverse-mode tape. Copies share the node.
///
/// Graphs are built eagerly by the free functions in ops.hpp; calling
/// `backward()` on a scalar result propagates into every leaf created with
/// `Var::parameter`. Leaf gradients accumulate across calls until
/// `zero_grad()`, which is how minibatches are summed.
template <typename S>
class Var {
 public:
  Var() = default;

  static Var constant(Tensor<S> value) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }

  static Var parameter(Tensor<S> value) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
  }

  /// Creates an interior node. The closure is dropped when no parent needs
  /// gradients, so pure inference keeps no tape.
  static Var from_op(Tensor<S> value, std::vector<Var> inputs, std::function<void(Node<S>&)> fn) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(value);
    n->leaf = false;
    for (const auto& in : inputs) {
      if (in.requires_grad()) n->requires_grad = true;
    }
    if (n->requires_grad) {
      n->parents.reserve(inputs.size());
      for (auto& in : inputs) n->parents.push_back(in.node_);
      n->backward_fn = std::move(fn);
    }
    return Var(std::move(n));
  }

  bool valid() const { return static_cast<bool>(node_); }
  const Tensor<S>& value() const { return node_->value; }
  Tensor<S>& mutable_value() { return node_->value; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_->has_grad(); }
  const MatrixX<S>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad.resize(0, 0); }

  /// Scalar value of a 1×1×1 result.
  S item() const { return node_->value.data(0, 0); }

  Var detach() const { return constant(node_->value); }

  void backward() {
    if (node_->value.size() != 1) throw std::logic_error("backward: root must be a scalar");
    backward(MatrixX<S>::Ones(1, 1));
  }

  void backward(const MatrixX<S>& seed) {
    if (!node_->requires_grad) return;
    std::vector<std::shared_ptr<Node<S>>> order;
    std::unordered_set<Node<S>*> seen;
    std::vector<std::pair<std::shared_ptr<Node<S>>, std::size_t>> stack;
    stack.emplace_back(node_, 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        std::shared_ptr<Node<S>> p = n->parents[next++];
        if (p->requires_grad && !p->leaf && seen.insert(p.get()).second) stack.emplace_back(std::move(p), 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->accumulate(seed);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<S>* n = it->get();
      if (n->has_grad() && n->backward_fn) n->backward_fn(*n);
      // Interior nodes are single-use: release the tape as we go.
      n->backward_fn = nullptr;
      n->parents.clear();
      n->grad.resize(0, 0);
    }
  }

  const std::shared_ptr<Node<S>>& node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node<S>> n) : node_(std::move(n)) {}
  std::shared_ptr<Node<S>> node_;
};

}  // namespace refvae
