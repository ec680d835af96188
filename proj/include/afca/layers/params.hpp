#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "afca/numcore/rng.hpp"
#include "afca/numcore/tensor.hpp"

namespace afca {

// What a parameter matrix is; L1 regularization applies to weights only.
enum class ParamRole { Weight, Bias, Norm, PositionBias };

template <class S>
struct ParamRef {
  std::string name;
  Matrix<S>* value;
  ParamRole role;
};

template <class S>
using ParamList = std::vector<ParamRef<S>>;

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)), filled row-major from the stream.
template <class S>
Matrix<S> uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, SplitMix64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Matrix<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
  return m;
}

// LayerNorm scale/shift pair (psi, phi).
template <class S>
struct NormParams {
  Matrix<S> psi;
  Matrix<S> phi;

  static NormParams init(Eigen::Index dim) {
    return {Matrix<S>::Ones(1, dim), Matrix<S>::Zero(1, dim)};
  }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".psi", &psi, ParamRole::Norm});
    out.push_back({prefix + ".phi", &phi, ParamRole::Norm});
  }
};

}  // namespace afca
