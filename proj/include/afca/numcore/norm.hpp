#pragma once

#include <cmath>
#include <span>

#include "afca/numcore/ops.hpp"

namespace afca {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// psi * (x - mean) / sqrt(var + eps) + phi per row, population variance.
// psi and phi are (1 x d) rows.
template <class S>
Matrix<S> layer_norm(const Matrix<S>& x, const Matrix<S>& psi, const Matrix<S>& phi, S eps) {
  Matrix<S> y(x.rows(), x.cols());
  const auto d = static_cast<S>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mu = x.row(r).sum() / d;
    const S var = (x.row(r).array() - mu).square().sum() / d;
    y.row(r) = ((x.row(r).array() - mu) / std::sqrt(var + eps)).matrix();
  }
  y.array().rowwise() *= psi.row(0).array();
  y.rowwise() += phi.row(0);
  return y;
}

template <class S>
Var<S> layer_norm(Var<S> x, Var<S> psi, Var<S> phi, S eps = S(kLayerNormEps)) {
  const auto d = x.cols();
  if (d == 0) throw ShapeError("layer_norm over an empty axis " + shape_str(x.value()));
  if (psi.rows() != 1 || psi.cols() != d || phi.rows() != 1 || phi.cols() != d) {
    throw ShapeError("layer_norm: scale " + shape_str(psi.value()) + " / shift " + shape_str(phi.value()) +
                     " do not match input " + shape_str(x.value()));
  }
  const auto& xv = x.value();
  Matrix<S> xhat(xv.rows(), d);
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const S mu = xv.row(r).sum() / static_cast<S>(d);
    const S var = (xv.row(r).array() - mu).square().sum() / static_cast<S>(d);
    inv_std(r) = S(1) / std::sqrt(var + eps);
    xhat.row(r) = ((xv.row(r).array() - mu) * inv_std(r)).matrix();
  }
  Matrix<S> out = xhat;
  out.array().rowwise() *= psi.value().row(0).array();
  out.rowwise() += phi.value().row(0);
  const int ix = x.id, ip = psi.id, ih = phi.id;
  return x.graph->push(std::move(out), Op::LayerNorm, {ix, ip, ih},
                       [ix, ip, ih, xhat, inv_std](Graph<S>& gr, int self) {
                         const auto& gs = gr.node(self).grad;
                         if (gr.requires_grad(ip)) gr.grad_mut(ip) += (gs.array() * xhat.array()).colwise().sum().matrix();
                         if (gr.requires_grad(ih)) gr.grad_mut(ih) += gs.colwise().sum();
                         if (!gr.requires_grad(ix)) return;
                         const auto n = static_cast<S>(xhat.cols());
                         Matrix<S> gxhat = gs;
                         gxhat.array().rowwise() *= gr.node(ip).value.row(0).array();
                         auto& gx = gr.grad_mut(ix);
                         for (Eigen::Index r = 0; r < gxhat.rows(); ++r) {
                           const S m1 = gxhat.row(r).sum() / n;
                           const S m2 = gxhat.row(r).dot(xhat.row(r)) / n;
                           gx.row(r).array() += inv_std(r) * (gxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                         }
                       });
}

enum class NormMode { Train, Eval };

// Running statistics for batch normalization, per feature (column).
template <class S>
struct BatchNormState {
  Matrix<S> running_mean;
  Matrix<S> running_var;
  bool initialized = false;
  S momentum = S(kBatchNormMomentum);
  S eps = S(kBatchNormEps);
};

// Normalizes each column over the batch (rows). Train mode uses batch
// statistics and updates the running estimates; eval mode uses the running
// estimates and fails if no train update has happened.
template <class S>
Var<S> batch_norm(Var<S> x, Var<S> gamma, Var<S> shift, BatchNormState<S>& state, NormMode mode) {
  const auto& xv = x.value();
  const auto d = xv.cols();
  if (xv.rows() < 1) throw ShapeError("batch_norm on an empty batch");
  if (gamma.rows() != 1 || gamma.cols() != d || shift.rows() != 1 || shift.cols() != d) {
    throw ShapeError("batch_norm: gamma " + shape_str(gamma.value()) + " / shift " + shape_str(shift.value()) +
                     " do not match input " + shape_str(xv));
  }
  Matrix<S> mu, var;
  if (mode == NormMode::Train) {
    mu = xv.colwise().mean();
    var = (xv.rowwise() - mu.row(0)).array().square().colwise().mean().matrix();
    if (!state.initialized) {
      state.running_mean = Matrix<S>::Zero(1, d);
      state.running_var = Matrix<S>::Ones(1, d);
      state.initialized = true;
    }
    state.running_mean = (S(1) - state.momentum) * state.running_mean + state.momentum * mu;
    state.running_var = (S(1) - state.momentum) * state.running_var + state.momentum * var;
  } else {
    if (!state.initialized) throw StateError("batch_norm eval before any train update");
    if (state.running_mean.cols() != d) throw ShapeError("batch_norm running statistics do not match input");
    mu = state.running_mean;
    var = state.running_var;
  }
  const Matrix<S> inv_std = (var.array() + state.eps).rsqrt().matrix();
  Matrix<S> xhat = xv.rowwise() - mu.row(0);
  xhat.array().rowwise() *= inv_std.row(0).array();
  Matrix<S> out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += shift.value().row(0);
  const bool train = mode == NormMode::Train;
  const int ix = x.id, ig = gamma.id, is = shift.id;
  return x.graph->push(std::move(out), Op::BatchNorm, {ix, ig, is},
                       [ix, ig, is, xhat, inv_std, train](Graph<S>& gr, int self) {
                         const auto& gs = gr.node(self).grad;
                         if (gr.requires_grad(ig)) gr.grad_mut(ig) += (gs.array() * xhat.array()).colwise().sum().matrix();
                         if (gr.requires_grad(is)) gr.grad_mut(is) += gs.colwise().sum();
                         if (!gr.requires_grad(ix)) return;
                         Matrix<S> gxhat = gs;
                         gxhat.array().rowwise() *= gr.node(ig).value.row(0).array();
                         if (!train) {
                           gxhat.array().rowwise() *= inv_std.row(0).array();
                           gr.grad_mut(ix) += gxhat;
                           return;
                         }
                         const auto n = static_cast<S>(xhat.rows());
                         const Matrix<S> m1 = gxhat.colwise().sum() / n;
                         const Matrix<S> m2 = (gxhat.array() * xhat.array()).colwise().sum().matrix() / n;
                         Matrix<S> gx = gxhat.rowwise() - m1.row(0);
                         gx.array() -= xhat.array().rowwise() * m2.row(0).array();
                         gx.array().rowwise() *= inv_std.row(0).array();
                         gr.grad_mut(ix) += gx;
                       });
}

// lambda * sum |w| over the given weight matrices.
template <class S>
S l1_penalty(std::span<const Matrix<S>* const> weights, S lambda) {
  if (lambda < S(0)) throw ConfigError("l1 lambda must be >= 0, got " + std::to_string(lambda));
  S total = 0;
  for (const auto* w : weights) total += w->cwiseAbs().sum();
  return lambda * total;
}

template <class S>
Var<S> l1_penalty(Graph<S>& g, std::span<const Matrix<S>* const> weights, S lambda) {
  if (lambda < S(0)) throw ConfigError("l1 lambda must be >= 0, got " + std::to_string(lambda));
  Var<S> total = g.constant(Matrix<S>::Zero(1, 1));
  for (const auto* w : weights) total = total + sum(abs(g.parameter(*w)));
  return scale(total, lambda);
}

}  // namespace afca
