#pragma once

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Graph owns the tape. When recording is off, nodes carry no backward
// closures and are freed as soon as the last Var referencing them dies, so
// inference memory is bounded by the live activations only.

#include "abupt/core/error.hpp"
#include "abupt/core/memory.hpp"
#include "abupt/core/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace abupt::ad {

template <class T>
struct Parameter {
  Matrix<T> value;
  Matrix<T> grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <class T>
class Graph;

template <class T>
struct Node {
  Matrix<T> own;
  const Matrix<T>* external = nullptr;
  Matrix<T> grad;
  bool needs_grad = false;
  std::function<void(const Matrix<T>&)> backward;
  std::size_t tracked = 0;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  ~Node() { memory::release(tracked); }

  const Matrix<T>& value() const { return external ? *external : own; }

  void set_value(Matrix<T>&& m) {
    own = std::move(m);
    track(static_cast<std::size_t>(own.size()) * sizeof(T));
  }

  /// Adds `g` into this node's gradient, allocating it on first use.
  template <class Expr>
  void accumulate(const Expr& g) {
    if (!needs_grad) return;
    if (grad.size() == 0) {
      grad = g;
      track(static_cast<std::size_t>(grad.size()) * sizeof(T));
    } else {
      grad += g;
    }
  }

 private:
  void track(std::size_t bytes) {
    tracked += bytes;
    memory::acquire(bytes);
  }
};

template <class T>
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node<T>> node, Graph<T>* graph) : node_(std::move(node)), graph_(graph) {}

  const Matrix<T>& value() const { return node_->value(); }
  const Matrix<T>& grad() const { return node_->grad; }
  Index rows() const { return node_->value().rows(); }
  Index cols() const { return node_->value().cols(); }
  bool needs_grad() const { return node_->needs_grad; }
  bool valid() const { return static_cast<bool>(node_); }

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }
  Graph<T>& graph() const { return *graph_; }

 private:
  std::shared_ptr<Node<T>> node_;
  Graph<T>* graph_ = nullptr;
};

template <class T>
class Graph {
 public:
  explicit Graph(bool record = false) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  /// Emulated half-precision activations: linear-layer outputs are rounded
  /// to binary16. Embeddings, rotations and softmax stay at full precision.
  void set_half_activations(bool on) { half_ = on; }
  bool half_activations() const { return half_; }

  Var<T> constant(Matrix<T> m) {
    auto n = std::make_shared<Node<T>>();
    n->set_value(std::move(m));
    return Var<T>(std::move(n), this);
  }

  /// Leaf bound to parameter storage. Repeated calls return the same node so
  /// gradients from every use accumulate in one place.
  Var<T> param(Parameter<T>& p) {
    auto it = params_.find(&p);
    if (it != params_.end()) return it->second;
    auto n = std::make_shared<Node<T>>();
    n->external = &p.value;
    n->needs_grad = record_;
    Var<T> v(std::move(n), this);
    params_.emplace(&p, v);
    return v;
  }

  /// Creates an op result. `back` receives the output gradient and must
  /// accumulate into the parents it captured.
  Var<T> make(Matrix<T>&& value, std::initializer_list<const Var<T>*> parents,
              std::function<void(const Matrix<T>&)> back) {
    auto n = std::make_shared<Node<T>>();
    n->set_value(std::move(value));
    bool needs = false;
    if (record_) {
      for (const Var<T>* p : parents) needs = needs || p->needs_grad();
    }
    n->needs_grad = needs;
    if (needs) {
      n->backward = std::move(back);
      tape_.push_back(n);
    }
    return Var<T>(std::move(n), this);
  }

  /// Backpropagates from a 1x1 output and adds the result into each bound
  /// Parameter's grad (which must be allocated by the caller).
  void backward(const Var<T>& out) {
    require(record_, "backward on a non-recording graph");
    require(out.rows() == 1 && out.cols() == 1, "backward expects a scalar output");
    if (!out.needs_grad()) return;
    out.node().accumulate(Matrix<T>::Ones(1, 1));
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.grad.size() == 0 || !n.backward) continue;
      n.backward(n.grad);
    }
    for (auto& [p, v] : params_) {
      const Matrix<T>& g = v.node().grad;
      if (g.size() == 0) continue;
      if (p->grad.size() == 0) p->grad = Matrix<T>::Zero(p->value.rows(), p->value.cols());
      p->grad += g;
    }
  }

 private:
  bool record_;
  bool half_ = false;
  std::vector<std::shared_ptr<Node<T>>> tape_;
  std::unordered_map<Parameter<T>*, Var<T>> params_;
};

}  // namespace abupt::ad
