#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "afca/numcore/graph.hpp"

namespace afca {

namespace detail {

inline Eigen::Index broadcast_dim(const char* op, Eigen::Index a, Eigen::Index b,
                                  const std::string& sa, const std::string& sb) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw ShapeError(std::string(op) + ": incompatible shapes " + sa + " and " + sb);
}

template <class S>
std::pair<Eigen::Index, Eigen::Index> broadcast_shape(const char* op, const Matrix<S>& a,
                                                      const Matrix<S>& b) {
  const auto sa = shape_str(a), sb = shape_str(b);
  return {broadcast_dim(op, a.rows(), b.rows(), sa, sb), broadcast_dim(op, a.cols(), b.cols(), sa, sb)};
}

template <class S>
Matrix<S> expand(const Matrix<S>& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

// Sums a broadcast gradient back down to the operand's shape.
template <class S>
void accumulate_reduced(Matrix<S>& target, const Matrix<S>& g) {
  if (target.rows() == g.rows() && target.cols() == g.cols()) {
    target += g;
  } else if (target.rows() == 1 && target.cols() == 1) {
    target(0, 0) += g.sum();
  } else if (target.rows() == 1) {
    target += g.colwise().sum();
  } else {
    target += g.rowwise().sum();
  }
}

template <class S>
bool needs(Graph<S>& g, int id) {
  return g.requires_grad(id);
}

}  // namespace detail

template <class S>
Var<S> constant_like(Var<S> v, const Matrix<S>& value) {
  return v.graph->constant(value);
}

template <class S>
Var<S> operator+(Var<S> a, Var<S> b) {
  auto& g = *a.graph;
  const auto [r, c] = detail::broadcast_shape("add", a.value(), b.value());
  Matrix<S> out = detail::expand(a.value(), r, c);
  if (b.rows() == r && b.cols() == c) {
    out += b.value();
  } else {
    out += detail::expand(b.value(), r, c);
  }
  const int ia = a.id, ib = b.id;
  return g.push(std::move(out), Op::Add, {ia, ib}, [ia, ib](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    if (gr.requires_grad(ia)) detail::accumulate_reduced(gr.grad_mut(ia), gs);
    if (gr.requires_grad(ib)) detail::accumulate_reduced(gr.grad_mut(ib), gs);
  });
}

template <class S>
Var<S> operator-(Var<S> a, Var<S> b) {
  auto& g = *a.graph;
  const auto [r, c] = detail::broadcast_shape("sub", a.value(), b.value());
  Matrix<S> out = detail::expand(a.value(), r, c) - detail::expand(b.value(), r, c);
  const int ia = a.id, ib = b.id;
  return g.push(std::move(out), Op::Sub, {ia, ib}, [ia, ib](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    if (gr.requires_grad(ia)) detail::accumulate_reduced(gr.grad_mut(ia), gs);
    if (gr.requires_grad(ib)) detail::accumulate_reduced(gr.grad_mut(ib), Matrix<S>(-gs));
  });
}

template <class S>
Var<S> hadamard(Var<S> a, Var<S> b) {
  auto& g = *a.graph;
  const auto [r, c] = detail::broadcast_shape("hadamard", a.value(), b.value());
  Matrix<S> out = (detail::expand(a.value(), r, c).array() * detail::expand(b.value(), r, c).array()).matrix();
  const int ia = a.id, ib = b.id;
  return g.push(std::move(out), Op::Hadamard, {ia, ib}, [ia, ib, r, c](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    if (gr.requires_grad(ia)) {
      Matrix<S> d = (gs.array() * detail::expand(gr.node(ib).value, r, c).array()).matrix();
      detail::accumulate_reduced(gr.grad_mut(ia), d);
    }
    if (gr.requires_grad(ib)) {
      Matrix<S> d = (gs.array() * detail::expand(gr.node(ia).value, r, c).array()).matrix();
      detail::accumulate_reduced(gr.grad_mut(ib), d);
    }
  });
}

template <class S>
Var<S> operator/(Var<S> a, Var<S> b) {
  auto& g = *a.graph;
  const auto [r, c] = detail::broadcast_shape("div", a.value(), b.value());
  Matrix<S> out = (detail::expand(a.value(), r, c).array() / detail::expand(b.value(), r, c).array()).matrix();
  const int ia = a.id, ib = b.id;
  return g.push(std::move(out), Op::Div, {ia, ib}, [ia, ib, r, c](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    const Matrix<S> bv = detail::expand(gr.node(ib).value, r, c);
    if (gr.requires_grad(ia)) {
      Matrix<S> d = (gs.array() / bv.array()).matrix();
      detail::accumulate_reduced(gr.grad_mut(ia), d);
    }
    if (gr.requires_grad(ib)) {
      const auto& y = gr.node(self).value;
      Matrix<S> d = (-gs.array() * y.array() / bv.array()).matrix();
      detail::accumulate_reduced(gr.grad_mut(ib), d);
    }
  });
}

template <class S>
Var<S> scale(Var<S> a, S factor) {
  const int ia = a.id;
  return a.graph->push(a.value() * factor, Op::Scale, {ia}, [ia, factor](Graph<S>& gr, int self) {
    gr.grad_mut(ia) += gr.node(self).grad * factor;
  });
}

template <class S>
Var<S> operator*(S factor, Var<S> a) {
  return scale(a, factor);
}

template <class S>
Var<S> operator-(Var<S> a) {
  return scale(a, S(-1));
}

template <class S>
Var<S> matmul(Var<S> a, Var<S> b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.value()) + " and " +
                     shape_str(b.value()));
  }
  const int ia = a.id, ib = b.id;
  Matrix<S> out = a.value() * b.value();
  return a.graph->push(std::move(out), Op::MatMul, {ia, ib}, [ia, ib](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    if (gr.requires_grad(ia)) gr.grad_mut(ia).noalias() += gs * gr.node(ib).value.transpose();
    if (gr.requires_grad(ib)) gr.grad_mut(ib).noalias() += gr.node(ia).value.transpose() * gs;
  });
}

// x W^T + b, with W stored (out x in) and b a 1 x out row broadcast over x's rows.
template <class S>
Var<S> affine(Var<S> x, Var<S> w, Var<S> b) {
  if (x.cols() != w.cols()) {
    throw ShapeError("affine: input " + shape_str(x.value()) + " does not match weight " +
                     shape_str(w.value()));
  }
  if (b.rows() != 1 || b.cols() != w.rows()) {
    throw ShapeError("affine: bias " + shape_str(b.value()) + " does not match weight " +
                     shape_str(w.value()));
  }
  Matrix<S> out = x.value() * w.value().transpose();
  out.rowwise() += b.value().row(0);
  const int ix = x.id, iw = w.id, ib = b.id;
  return x.graph->push(std::move(out), Op::MatMul, {ix, iw, ib}, [ix, iw, ib](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    if (gr.requires_grad(ix)) gr.grad_mut(ix).noalias() += gs * gr.node(iw).value;
    if (gr.requires_grad(iw)) gr.grad_mut(iw).noalias() += gs.transpose() * gr.node(ix).value;
    if (gr.requires_grad(ib)) gr.grad_mut(ib) += gs.colwise().sum();
  });
}

// x W^T without bias.
template <class S>
Var<S> project(Var<S> x, Var<S> w) {
  if (x.cols() != w.cols()) {
    throw ShapeError("project: input " + shape_str(x.value()) + " does not match weight " +
                     shape_str(w.value()));
  }
  Matrix<S> out = x.value() * w.value().transpose();
  const int ix = x.id, iw = w.id;
  return x.graph->push(std::move(out), Op::MatMul, {ix, iw}, [ix, iw](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    if (gr.requires_grad(ix)) gr.grad_mut(ix).noalias() += gs * gr.node(iw).value;
    if (gr.requires_grad(iw)) gr.grad_mut(iw).noalias() += gs.transpose() * gr.node(ix).value;
  });
}

template <class S>
Var<S> transpose(Var<S> a) {
  const int ia = a.id;
  return a.graph->push(a.value().transpose(), Op::Transpose, {ia}, [ia](Graph<S>& gr, int self) {
    gr.grad_mut(ia) += gr.node(self).grad.transpose();
  });
}

// Column-wise concatenation (all parts share the row count).
template <class S>
Var<S> concat(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat: row mismatch " + shape_str(parts.front().value()) + " and " +
                       shape_str(p.value()));
    }
    cols += p.cols();
  }
  Matrix<S> out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    ids.push_back(p.id);
    offsets.push_back(off);
    off += p.cols();
  }
  auto& g = *parts.front().graph;
  return g.push(std::move(out), Op::Concat, ids, [ids, offsets](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!gr.requires_grad(ids[k])) continue;
      auto& tgt = gr.grad_mut(ids[k]);
      tgt += gs.middleCols(offsets[k], tgt.cols());
    }
  });
}

// axis 0 sums over rows (result 1 x cols), axis 1 over columns (rows x 1).
template <class S>
Var<S> sum(Var<S> a, int axis) {
  const int ia = a.id;
  if (axis != 0 && axis != 1) throw ShapeError("sum: axis must be 0 or 1");
  Matrix<S> out = axis == 0 ? Matrix<S>(a.value().colwise().sum()) : Matrix<S>(a.value().rowwise().sum());
  return a.graph->push(std::move(out), Op::SumAxis, {ia}, [ia](Graph<S>& gr, int self) {
    detail::accumulate_reduced(gr.grad_mut(ia), Matrix<S>(detail::expand(gr.node(self).grad,
                                                                         gr.node(ia).value.rows(),
                                                                         gr.node(ia).value.cols())));
  });
}

template <class S>
Var<S> sum(Var<S> a) {
  const int ia = a.id;
  Matrix<S> out = Matrix<S>::Constant(1, 1, a.value().sum());
  return a.graph->push(std::move(out), Op::SumAll, {ia}, [ia](Graph<S>& gr, int self) {
    gr.grad_mut(ia).array() += gr.node(self).grad(0, 0);
  });
}

template <class S>
Var<S> mean(Var<S> a) {
  if (a.value().size() == 0) throw ShapeError("mean of empty operand");
  return scale(sum(a), S(1) / static_cast<S>(a.value().size()));
}

namespace detail {

template <class S, class Fwd, class Deriv>
Var<S> unary(Var<S> a, Op op, Fwd fwd, Deriv deriv) {
  const int ia = a.id;
  Matrix<S> out = a.value().unaryExpr(fwd);
  return a.graph->push(std::move(out), op, {ia}, [ia, deriv](Graph<S>& gr, int self) {
    const auto& n = gr.node(self);
    gr.grad_mut(ia).array() += n.grad.array() * deriv(gr.node(ia).value.array(), n.value.array());
  });
}

}  // namespace detail

template <class S>
Var<S> sigmoid(Var<S> a) {
  return detail::unary(
      a, Op::Sigmoid,
      [](S x) {
        if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
        const S e = std::exp(x);
        return e / (S(1) + e);
      },
      [](const auto&, const auto& y) { return y * (S(1) - y); });
}

template <class S>
Var<S> tanh(Var<S> a) {
  return detail::unary(
      a, Op::Tanh, [](S x) { return std::tanh(x); },
      [](const auto&, const auto& y) { return S(1) - y.square(); });
}

// Subgradient at 0 is 0.
template <class S>
Var<S> relu(Var<S> a) {
  return detail::unary(
      a, Op::Relu, [](S x) { return x > S(0) ? x : S(0); },
      [](const auto& x, const auto&) { return (x > S(0)).template cast<S>(); });
}

template <class S>
Var<S> exp(Var<S> a) {
  return detail::unary(
      a, Op::Exp, [](S x) { return std::exp(x); }, [](const auto&, const auto& y) { return y; });
}

template <class S>
Var<S> log(Var<S> a) {
  return detail::unary(
      a, Op::Log, [](S x) { return std::log(x); }, [](const auto& x, const auto&) { return x.inverse(); });
}

// Subgradient at 0 is 0.
template <class S>
Var<S> abs(Var<S> a) {
  return detail::unary(
      a, Op::Abs, [](S x) { return std::abs(x); },
      [](const auto& x, const auto&) {
        return (x > S(0)).template cast<S>() - (x < S(0)).template cast<S>();
      });
}

template <class S>
Var<S> square(Var<S> a) {
  return detail::unary(
      a, Op::Square, [](S x) { return x * x; }, [](const auto& x, const auto&) { return S(2) * x; });
}

// Row-wise softmax over the last axis, max-shifted.
template <class S>
Matrix<S> softmax_rows(const Matrix<S>& x) {
  if (x.cols() == 0) throw ShapeError("softmax over an empty axis " + shape_str(x));
  Matrix<S> y = x;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    y.row(r).array() -= y.row(r).maxCoeff();
    y.row(r) = y.row(r).array().exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

template <class S>
Var<S> softmax(Var<S> a) {
  const int ia = a.id;
  return a.graph->push(softmax_rows(a.value()), Op::Softmax, {ia}, [ia](Graph<S>& gr, int self) {
    const auto& n = gr.node(self);
    const Matrix<S> gy = (n.grad.array() * n.value.array()).matrix();
    const Eigen::Matrix<S, Eigen::Dynamic, 1> dots = gy.rowwise().sum();
    Matrix<S> d = gy;
    d -= (n.value.array().colwise() * dots.array()).matrix();
    gr.grad_mut(ia) += d;
  });
}

// Row r of the input becomes rows r*times .. r*times+times-1 of the output.
template <class S>
Var<S> repeat_rows(Var<S> a, Eigen::Index times) {
  const auto& v = a.value();
  Matrix<S> out(v.rows() * times, v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) out.middleRows(r * times, times).rowwise() = v.row(r);
  const int ia = a.id;
  return a.graph->push(std::move(out), Op::RepeatRows, {ia}, [ia, times](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    auto& tgt = gr.grad_mut(ia);
    for (Eigen::Index r = 0; r < tgt.rows(); ++r) tgt.row(r) += gs.middleRows(r * times, times).colwise().sum();
  });
}

// Row-major reshape.
template <class S>
Var<S> reshape(Var<S> a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.value()) + " as (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + ")");
  }
  Matrix<S> out = Eigen::Map<const Matrix<S>>(a.value().data(), rows, cols);
  const int ia = a.id;
  return a.graph->push(std::move(out), Op::Reshape, {ia}, [ia](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    auto& tgt = gr.grad_mut(ia);
    Eigen::Map<Matrix<S>>(tgt.data(), gs.rows(), gs.cols()) += gs;
  });
}

template <class S>
Var<S> slice(Var<S> a, Eigen::Index row0, Eigen::Index rows, Eigen::Index col0, Eigen::Index cols) {
  if (row0 < 0 || col0 < 0 || row0 + rows > a.rows() || col0 + cols > a.cols()) {
    throw ShapeError("slice out of range of " + shape_str(a.value()));
  }
  const int ia = a.id;
  Matrix<S> out = a.value().block(row0, col0, rows, cols);
  return a.graph->push(std::move(out), Op::Slice, {ia}, [ia, row0, col0](Graph<S>& gr, int self) {
    const auto& gs = gr.node(self).grad;
    gr.grad_mut(ia).block(row0, col0, gs.rows(), gs.cols()) += gs;
  });
}

template <class S>
Var<S> element(Var<S> a, Eigen::Index i, Eigen::Index j) {
  return slice(a, i, 1, j, 1);
}

// Same value, no gradient flow.
template <class S>
Var<S> stop_gradient(Var<S> a) {
  return a.graph->push(a.value(), Op::StopGradient, {}, nullptr);
}

// Stacks a time-major sequence of (1 x d) rows into a (T x d) matrix value.
template <class S>
Matrix<S> stack_rows(const Sequence<S>& seq) {
  if (seq.empty()) return {};
  Matrix<S> out(static_cast<Eigen::Index>(seq.size()), seq.front().cols());
  for (std::size_t t = 0; t < seq.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = seq[t].value().row(0);
  return out;
}

// Splits a (T x d) matrix into T constant (1 x d) steps.
template <class S>
Sequence<S> constant_sequence(Graph<S>& g, const Matrix<S>& x) {
  Sequence<S> seq;
  for (Eigen::Index t = 0; t < x.rows(); ++t) seq.push_back(g.constant(x.row(t)));
  return seq;
}

}  // namespace afca
