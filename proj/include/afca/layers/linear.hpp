#pragma once

#include "afca/layers/params.hpp"
#include "afca/numcore/ops.hpp"

namespace afca {

template <class S>
struct LinearParams {
  Matrix<S> W;  // out x in
  Matrix<S> b;  // 1 x out

  static LinearParams init(Eigen::Index in, Eigen::Index out, SplitMix64& rng) {
    LinearParams p;
    p.W = uniform_init<S>(out, in, in, rng);
    p.b = uniform_init<S>(1, out, in, rng);
    return p;
  }

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".W", &W, ParamRole::Weight});
    out.push_back({prefix + ".b", &b, ParamRole::Bias});
  }
};

// y = W x + b for each row x of the batch.
template <class S>
Var<S> linear_forward(Graph<S>& g, const LinearParams<S>& p, Var<S> x) {
  if (x.cols() != p.in_dim()) {
    throw ShapeError("linear: input " + shape_str(x.value()) + " but layer expects " +
                     std::to_string(p.in_dim()) + " features");
  }
  return affine(x, g.parameter(p.W), g.parameter(p.b));
}

}  // namespace afca
