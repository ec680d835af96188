#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "afca/numcore/graph.hpp"

namespace afca {

// Compares reverse-mode gradients against central differences.
// Error per coordinate is |analytic - numeric| / max(1, |analytic|).
template <class S>
S grad_check(const std::function<Var<S>(Graph<S>&)>& scalar_fn, std::span<Matrix<S>* const> params, S eps) {
  std::vector<Matrix<S>> analytic;
  {
    Graph<S> g;
    auto root = scalar_fn(g);
    g.backward(root);
    for (auto* p : params) {
      const auto* gp = g.grad_of(*p);
      analytic.push_back(gp ? *gp : Matrix<S>::Zero(p->rows(), p->cols()));
    }
  }
  auto eval = [&]() {
    Graph<S> g;
    return scalar_fn(g).value()(0, 0);
  };
  S worst = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const S saved = p.data()[i];
      p.data()[i] = saved + eps;
      const S up = eval();
      p.data()[i] = saved - eps;
      const S down = eval();
      p.data()[i] = saved;
      const S numeric = (up - down) / (S(2) * eps);
      const S a = analytic[k].data()[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(S(1), std::abs(a)));
    }
  }
  return worst;
}

// Single-input form: fn receives the graph and a leaf holding `point`.
template <class S>
S grad_check(const std::function<Var<S>(Graph<S>&, Var<S>)>& scalar_fn, const Matrix<S>& point, S eps) {
  Matrix<S> x = point;
  Matrix<S>* params[] = {&x};
  return grad_check<S>([&](Graph<S>& g) { return scalar_fn(g, g.parameter(x)); }, params, eps);
}

}  // namespace afca
