#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "wavex/error.hpp"

namespace wavex::nn {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, [](std::size_t a, int b) { return a * std::size_t(b); });
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

template <class T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T{0});
    return grad.data();
  }
};

namespace detail {
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode(); }

/// Disables graph recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Handle to a node of the dynamic graph. Copies share storage.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->data.assign(shape_numel(shape), T{0});
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.node_->data.begin(), t.node_->data.end(), value);
    return t;
  }

  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false) {
    if (data.size() != shape_numel(shape)) fail(Errc::ShapeMismatch, "data length does not match " + shape_str(shape));
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(i); }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t numel() const { return node_->data.size(); }

  T* data() { return node_->data.data(); }
  const T* data() const { return node_->data.data(); }
  std::vector<T>& values() { return node_->data; }
  const std::vector<T>& values() const { return node_->data; }
  T item() const {
    if (numel() != 1) fail(Errc::ShapeMismatch, "item() on tensor of shape " + shape_str(shape()));
    return node_->data[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient values; zeros when nothing has flowed in yet.
  const std::vector<T>& grad() const {
    if (node_->grad.empty()) node_->grad.assign(node_->data.size(), T{0});
    return node_->grad;
  }
  std::vector<T>& grad_mut() {
    node_->grad_buffer();
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  /// Same values, cut from the graph.
  Tensor detach() const { return from(shape(), values(), false); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

  /// Reverse sweep from a scalar output.
  void backward() {
    if (numel() != 1) fail(Errc::ShapeMismatch, "backward() needs a scalar output");
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node<T>* p = n->parents[next++].get();
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->grad_buffer()[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* n = *it;
      if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Output tensor for an op. Records parents and the backward closure only when
/// grad mode is on and some input needs a gradient.
template <class T>
Tensor<T> make_result(Shape shape, std::initializer_list<Tensor<T>> inputs, std::vector<T> data = {}) {
  auto n = std::make_shared<Node<T>>();
  n->data = data.empty() ? std::vector<T>(shape_numel(shape), T{0}) : std::move(data);
  n->shape = std::move(shape);
  if (grad_enabled()) {
    for (const auto& in : inputs)
      if (in.defined() && in.requires_grad()) n->requires_grad = true;
    if (n->requires_grad)
      for (const auto& in : inputs) n->parents.push_back(in.ptr());
  }
  return Tensor<T>(std::move(n));
}

template <class T>
Tensor<T> make_result(Shape shape, const std::vector<Tensor<T>>& inputs) {
  auto n = std::make_shared<Node<T>>();
  n->data.assign(shape_numel(shape), T{0});
  n->shape = std::move(shape);
  if (grad_enabled()) {
    for (const auto& in : inputs)
      if (in.requires_grad()) n->requires_grad = true;
    if (n->requires_grad)
      for (const auto& in : inputs) n->parents.push_back(in.ptr());
  }
  return Tensor<T>(std::move(n));
}

/// Installs a backward closure if the result is being tracked.
template <class T, class F>
void on_backward(Tensor<T>& out, F&& fn) {
  if (out.requires_grad()) out.node()->backward_fn = std::forward<F>(fn);
}

/// Grad buffer of an input if it needs one, else nullptr.
template <class T>
T* grad_of(const Tensor<T>& t) {
  return t.requires_grad() ? t.node()->grad_buffer() : nullptr;
}

inline void require_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) fail(Errc::ShapeMismatch, std::string(what) + ": " + shape_str(a) + " vs " + shape_str(b));
}

inline void require_rank(const Shape& a, std::size_t rank, const char* what) {
  if (a.size() != rank) fail(Errc::ShapeMismatch, std::string(what) + " expects rank " + std::to_string(rank) + ", got " + shape_str(a));
}

}  // namespace wavex::nn
