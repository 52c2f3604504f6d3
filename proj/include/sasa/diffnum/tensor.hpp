// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Dense double-precision tensor that doubles as a node of a
 *         reverse-mode tape.
 *
 * Every tensor is a 2-D row-major matrix. Vectors are 1xK (row) or Kx1
 * (column) matrices and scalars are 1x1. A tensor produced by an operation
 * keeps shared ownership of its inputs, so the graph lives exactly as long as
 * the tensors that reference it.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sasa {

/// Bad caller input: shapes, configs, files. Maps to exit code 2 in the CLI.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or Inf reached a value or gradient.
class NonFiniteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace sasa

namespace sasa::diffnum {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  constexpr std::size_t size() const { return rows * cols; }
  friend constexpr bool operator==(const Shape &, const Shape &) = default;
};

inline std::string to_string(Shape s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  /// Name of the producing op; empty for leaves.
  std::string op;
  std::uint64_t id = 0;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  /// Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node &)> backward_fn;
};

namespace detail {
inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

inline void require_finite(std::span<const double> xs, const char *what,
                           const std::string &op) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw NonFiniteError(std::string("non-finite ") + what + " in " +
                           (op.empty() ? std::string("leaf") : op));
    }
  }
}
} // namespace detail

class Tensor {
public:
  Tensor() = default;

  /// Trainable leaf holding @p values.
  static Tensor parameter(Shape shape, std::vector<double> values) {
    return leaf(shape, std::move(values), true);
  }
  /// Leaf that never receives gradients (data, masks, ones columns).
  static Tensor constant(Shape shape, std::vector<double> values) {
    return leaf(shape, std::move(values), false);
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return leaf(shape, std::vector<double>(shape.size(), 0.0), requires_grad);
  }
  static Tensor full(Shape shape, double value) {
    return leaf(shape, std::vector<double>(shape.size(), value), false);
  }
  static Tensor scalar(double value, bool requires_grad = false) {
    return leaf({1, 1}, {value}, requires_grad);
  }

  /// Result node of an op. @p backward reads the node's grad and pushes it
  /// into the parents; it is only invoked when the node requires grad.
  static Tensor from_op(std::string op, Shape shape, std::vector<double> values,
                        std::vector<Tensor> inputs,
                        std::function<void(Node &)> backward) {
    auto n = std::make_shared<Node>();
    if (values.size() != shape.size()) {
      throw std::logic_error(op + ": value count does not match shape");
    }
    detail::require_finite(values, "value", op);
    n->shape = shape;
    n->values = std::move(values);
    n->grad.assign(shape.size(), 0.0);
    n->op = std::move(op);
    n->id = detail::next_node_id();
    for (auto &in : inputs) {
      n->requires_grad = n->requires_grad || in.requires_grad();
      n->parents.push_back(in.node_);
    }
    if (n->requires_grad) {
      n->backward_fn = std::move(backward);
    }
    return Tensor(std::move(n));
  }

  bool defined() const { return static_cast<bool>(node_); }
  Shape shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->shape.size(); }
  bool is_vector() const { return rows() == 1 || cols() == 1; }

  std::span<double> values() { return node_->values; }
  std::span<const double> values() const { return node_->values; }
  std::span<double> grad() { return node_->grad; }
  std::span<const double> grad() const { return node_->grad; }

  double operator()(std::size_t r, std::size_t c) const {
    return node_->values[r * cols() + c];
  }
  double &at(std::size_t r, std::size_t c) {
    return node_->values[r * cols() + c];
  }
  double item() const {
    if (size() != 1) {
      throw InvalidInput("item() on a " + to_string(shape()) + " tensor");
    }
    return node_->values[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->op.empty(); }
  const std::string &op() const { return node_->op; }
  /// Identity of the producing op; empty for leaves.
  std::optional<std::uint64_t> tape_id() const {
    if (is_leaf()) {
      return std::nullopt;
    }
    return node_->id;
  }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  /// Copy of the values as a plain detached leaf.
  Tensor detach() const { return constant(shape(), node_->values); }

  Node &node() const { return *node_; }
  const NodePtr &node_ptr() const { return node_; }

  friend bool same_node(const Tensor &a, const Tensor &b) {
    return a.node_ == b.node_;
  }

private:
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor leaf(Shape shape, std::vector<double> values,
                     bool requires_grad) {
    if (values.size() != shape.size()) {
      throw InvalidInput("leaf: " + std::to_string(values.size()) +
                         " values for shape " + to_string(shape));
    }
    detail::require_finite(values, "value", "");
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->values = std::move(values);
    n->grad.assign(shape.size(), 0.0);
    n->id = detail::next_node_id();
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  NodePtr node_;
};

/// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls;
/// interior gradients are recomputed from scratch on every call.
inline void backward(const Tensor &loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw InvalidInput("backward: loss must be a scalar tensor");
  }
  // Iterative post-order DFS; chained recurrences are deep.
  std::vector<Node *> order;
  std::unordered_set<const Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack;
  stack.emplace_back(&loss.node(), 0);
  seen.insert(&loss.node());
  while (!stack.empty()) {
    auto &[n, next] = stack.back();
    if (next < n->parents.size()) {
      Node *p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node *n : order) {
    if (!n->op.empty()) {
      std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
  }
  Node &root = loss.node();
  if (root.op.empty()) {
    root.grad[0] += 1.0;
  } else {
    root.grad[0] = 1.0;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backward_fn) {
      n->backward_fn(*n);
    }
  }
  for (Node *n : order) {
    detail::require_finite(n->grad, "gradient", n->op);
  }
}

} // namespace sasa::diffnum
