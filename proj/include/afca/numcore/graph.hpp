#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "afca/numcore/tensor.hpp"

namespace afca {

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Hadamard,
  Div,
  Scale,
  Neg,
  Transpose,
  Concat,
  SumAxis,
  SumAll,
  Sigmoid,
  Tanh,
  Relu,
  Softmax,
  Exp,
  Log,
  Abs,
  Square,
  LayerNorm,
  BatchNorm,
  RepeatRows,
  Reshape,
  Slice,
  Element,
  StopGradient,
};

template <class Scalar>
class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while the graph lives.
template <class Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Matrix<Scalar>& value() const { return graph->value(*this); }
  const Matrix<Scalar>& grad() const { return graph->grad(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <class Scalar>
using Sequence = std::vector<Var<Scalar>>;

// Tape-based reverse-mode graph. Nodes are appended in creation order, which
// is a topological order, so backward() is a single reverse sweep.
template <class Scalar>
class Graph {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Graph&, int)>;

  struct Node {
    Mat value;
    Mat grad;
    Op op = Op::Constant;
    std::vector<int> parents;
    Backward backward;
    bool requires_grad = false;
    bool is_parameter = false;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<Scalar> constant(Mat value) {
    return push(std::move(value), Op::Constant, {}, nullptr, false);
  }

  // Binds an externally owned parameter. Binding the same matrix twice yields
  // the same leaf, so gradients of reused weights accumulate in one place.
  Var<Scalar> parameter(const Mat& param) {
    if (auto it = bound_.find(&param); it != bound_.end()) return {this, it->second};
    auto v = push(param, Op::Leaf, {}, nullptr, true);
    nodes_[static_cast<std::size_t>(v.id)].is_parameter = true;
    bound_.emplace(&param, v.id);
    return v;
  }

  // A free leaf that is not tied to external storage (used by grad checks).
  Var<Scalar> variable(Mat value) { return push(std::move(value), Op::Leaf, {}, nullptr, true); }

  Var<Scalar> push(Mat value, Op op, std::vector<int> parents, Backward backward) {
    bool needs_grad = false;
    for (int p : parents) needs_grad = needs_grad || nodes_[static_cast<std::size_t>(p)].requires_grad;
    return push(std::move(value), op, std::move(parents), std::move(backward), needs_grad);
  }

  const Mat& value(Var<Scalar> v) const { return node(v.id).value; }
  const Mat& grad(Var<Scalar> v) const { return node(v.id).grad; }
  Mat& grad_mut(int id) { return node(id).grad; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  bool requires_grad(int id) const { return node(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of a bound parameter, or nullptr when it never entered the graph.
  const Mat* grad_of(const Mat& param) const {
    auto it = bound_.find(&param);
    return it == bound_.end() ? nullptr : &node(it->second).grad;
  }

  // Seeds d(root)/d(root) = 1 and sweeps backwards. Leaf gradients accumulate
  // across calls; interior gradients are recomputed each call.
  void backward(Var<Scalar> root) {
    const Mat& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1) {
      throw ShapeError("backward requires a scalar root, got " + shape_str(rv));
    }
    for (auto& n : nodes_) {
      if (n.requires_grad && n.op != Op::Leaf) n.grad.setZero(n.value.rows(), n.value.cols());
    }
    auto& seed = node(root.id).grad;
    if (seed.size() == 0) seed.setZero(1, 1);
    seed(0, 0) += Scalar(1);
    for (int id = root.id; id >= 0; --id) {
      Node& n = node(id);
      if (n.requires_grad && n.backward) n.backward(*this, id);
    }
  }

  void zero_grad() {
    for (auto& n : nodes_)
      if (n.requires_grad) n.grad.setZero(n.value.rows(), n.value.cols());
  }

 private:
  Var<Scalar> push(Mat value, Op op, std::vector<int> parents, Backward backward, bool needs_grad) {
    // Interior gradients are sized by backward(); nodes that need none keep
    // an empty buffer.
    Node n;
    if (needs_grad && op == Op::Leaf) n.grad = Mat::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    n.op = op;
    n.parents = std::move(parents);
    n.requires_grad = needs_grad;
    if (needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::unordered_map<const void*, int> bound_;
};

}  // namespace afca
