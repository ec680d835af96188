#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afca/numcore/tensor.hpp"

namespace afca {

inline constexpr double kDefaultLearningRate = 0.001;

template <class S>
struct AdamState {
  std::vector<Matrix<S>> m;
  std::vector<Matrix<S>> v;
  std::int64_t step_count = 0;
  S lr = S(kDefaultLearningRate);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
};

// One bias-corrected Adam update, in place. Moment buffers are created on the
// first call. Throws on any non-finite gradient before touching parameters.
template <class S>
void adam_step(std::span<Matrix<S>* const> params, std::span<const Matrix<S>> grads, AdamState<S>& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Matrix<S>::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix<S>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k]->rows() || grads[k].cols() != params[k]->cols()) {
      throw ShapeError("adam_step: gradient " + shape_str(grads[k]) + " for parameter " + std::to_string(k) +
                       " of shape " + shape_str(*params[k]));
    }
    if (!all_finite(grads[k])) {
      throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(k));
    }
  }
  state.step_count += 1;
  const S t = static_cast<S>(state.step_count);
  const S c1 = S(1) - std::pow(state.beta1, t);
  const S c2 = S(1) - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    m = state.beta1 * m + (S(1) - state.beta1) * grads[k];
    v = state.beta2 * v + (S(1) - state.beta2) * grads[k].cwiseAbs2();
    params[k]->array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  }
}

}  // namespace afca
