#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "afca/features/dataset.hpp"
#include "afca/layers.hpp"
#include "afca/models/model_spec.hpp"
#include "afca/numcore.hpp"

namespace afca {

using Real = double;
using Graph_ = Graph<Real>;
using Var_ = Var<Real>;

// One mini-batch: B rows of returns and the lag-aligned characteristic window
// for every (row, asset) pair.
struct Batch {
  MatrixXd y;                  // B x N
  std::vector<MatrixXd> z;     // window steps, oldest first; each (B*N) x C, row b*N + i
  std::vector<std::size_t> rows;

  std::size_t size() const { return static_cast<std::size_t>(y.rows()); }
};

// Gathers rows from the dataset. Window steps before row 0 are zero-padded.
Batch make_batch(const Dataset& data, std::span<const std::size_t> rows, const ModelSpec& spec);

// One-hidden-layer linear autoencoder: y^ = theta0 + theta1 (phi0 + phi1 y).
struct SimpleAeParams {
  LinearParams<Real> encoder;  // phi1 (K x N), phi0
  LinearParams<Real> decoder;  // theta1 (N x K), theta0
  NormParams<Real> bn;         // batch-norm scale/shift on the code, if enabled
  BatchNormState<Real> bn_state;
};

struct ConditionalAeParams {
  std::vector<LinearParams<Real>> beta_linear;   // Linear kind: hidden stack + final affine
  std::vector<LstmParams<Real>> beta_lstm;       // Lstm kind: stacked cells
  LinearParams<Real> beta_head;                  // Lstm kind: last hidden -> K
  std::vector<AfLstmLayerParams<Real>> beta_aflstm;  // AfLstm kind: layer outputs chain, last emits K
  std::vector<LinearParams<Real>> factor_net;    // hidden stack + final affine, N -> K
  NormParams<Real> bn;                           // batch-norm on the factor output, if enabled
  BatchNormState<Real> bn_state;
};

class Model {
 public:
  Model() = default;

  // Seeded initialization; identical (spec, seed) gives bit-identical parameters.
  static Model build(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }

  // Reconstruction y^ (B x N). Train mode updates batch-norm running statistics.
  Var_ forward(Graph_& g, const Batch& batch, NormMode mode);
  Var_ forward(Graph_& g, const Batch& batch) const;

  // Building blocks of the conditional model.
  Var_ beta(Graph_& g, const Batch& batch) const;  // (B*N) x K
  Var_ factor(Graph_& g, Var_ y) const;            // B x K

  MatrixXd predict(const Batch& batch) const;
  MatrixXd predict(const Dataset& data, std::span<const std::size_t> rows) const;

  // All parameters in a stable order; names are unique.
  ParamList<Real> parameters();
  std::vector<const MatrixXd*> weights() const;

  const SimpleAeParams& simple() const { return simple_; }
  SimpleAeParams& simple() { return simple_; }
  const ConditionalAeParams& conditional() const { return cond_; }
  ConditionalAeParams& conditional() { return cond_; }

 private:
  Var_ forward_impl(Graph_& g, const Batch& batch, NormMode mode, BatchNormState<Real>& bn_state) const;
  Var_ simple_forward(Graph_& g, Var_ y, NormMode mode, BatchNormState<Real>& bn_state) const;

  ModelSpec spec_;
  SimpleAeParams simple_;
  ConditionalAeParams cond_;
};

// y^_{i} = beta_i . X over the K factors, for each row: beta (B*N x K), X (B x K) -> (B x N).
Var_ combine_factors(Var_ beta, Var_ factors, Eigen::Index n_assets);

// u = y - y^ for the given rows.
MatrixXd residual(const Model& model, const Dataset& data, std::span<const std::size_t> rows);

// Members trained from consecutive seeds; predictions are the arithmetic mean,
// always accumulated in ascending seed order.
struct EnsembleModel {
  ModelSpec spec;
  std::vector<std::uint64_t> seeds;
  std::vector<Model> members;

  MatrixXd predict(const Dataset& data, std::span<const std::size_t> rows) const;
  MatrixXd residual(const Dataset& data, std::span<const std::size_t> rows) const;
};

}  // namespace afca
