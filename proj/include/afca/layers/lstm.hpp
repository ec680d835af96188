#pragma once

#include <utility>

#include "afca/layers/params.hpp"
#include "afca/numcore/ops.hpp"

namespace afca {

// Gated cell with forget gate: separate input (W_*) and recurrent (U_*)
// weights per gate, biases as 1 x hidden rows.
template <class S>
struct LstmParams {
  Matrix<S> W_i, W_f, W_o, W_c;
  Matrix<S> U_i, U_f, U_o, U_c;
  Matrix<S> b_i, b_f, b_o, b_c;

  static LstmParams init(Eigen::Index in, Eigen::Index hidden, SplitMix64& rng) {
    LstmParams p;
    for (auto* w : {&p.W_i, &p.W_f, &p.W_o, &p.W_c}) *w = uniform_init<S>(hidden, in, in, rng);
    for (auto* u : {&p.U_i, &p.U_f, &p.U_o, &p.U_c}) *u = uniform_init<S>(hidden, hidden, hidden, rng);
    p.b_i = Matrix<S>::Zero(1, hidden);
    p.b_f = Matrix<S>::Ones(1, hidden);
    p.b_o = Matrix<S>::Zero(1, hidden);
    p.b_c = Matrix<S>::Zero(1, hidden);
    return p;
  }

  Eigen::Index in_dim() const { return W_i.cols(); }
  Eigen::Index hidden_dim() const { return W_i.rows(); }

  void collect(ParamList<S>& out, const std::string& prefix) {
    const char* gates[] = {"i", "f", "o", "c"};
    Matrix<S>* ws[] = {&W_i, &W_f, &W_o, &W_c};
    Matrix<S>* us[] = {&U_i, &U_f, &U_o, &U_c};
    Matrix<S>* bs[] = {&b_i, &b_f, &b_o, &b_c};
    for (int k = 0; k < 4; ++k) {
      out.push_back({prefix + ".W_" + gates[k], ws[k], ParamRole::Weight});
      out.push_back({prefix + ".U_" + gates[k], us[k], ParamRole::Weight});
      out.push_back({prefix + ".b_" + gates[k], bs[k], ParamRole::Bias});
    }
  }
};

template <class S>
struct LstmState {
  Var<S> h;
  Var<S> c;
};

template <class S>
LstmState<S> lstm_cell(Graph<S>& g, const LstmParams<S>& p, Var<S> x, Var<S> h_prev, Var<S> c_prev) {
  const auto H = p.hidden_dim();
  if (x.cols() != p.in_dim()) {
    throw ShapeError("lstm_cell: input " + shape_str(x.value()) + " but cell expects " +
                     std::to_string(p.in_dim()) + " features");
  }
  if (h_prev.cols() != H || c_prev.cols() != H || h_prev.rows() != x.rows() || c_prev.rows() != x.rows()) {
    throw ShapeError("lstm_cell: state " + shape_str(h_prev.value()) + "/" + shape_str(c_prev.value()) +
                     " does not match input " + shape_str(x.value()) + " with hidden " + std::to_string(H));
  }
  auto gate = [&](const Matrix<S>& W, const Matrix<S>& U, const Matrix<S>& b) {
    return affine(x, g.parameter(W), g.parameter(b)) + project(h_prev, g.parameter(U));
  };
  auto i = sigmoid(gate(p.W_i, p.U_i, p.b_i));
  auto f = sigmoid(gate(p.W_f, p.U_f, p.b_f));
  auto o = sigmoid(gate(p.W_o, p.U_o, p.b_o));
  auto cand = tanh(gate(p.W_c, p.U_c, p.b_c));
  auto c = hadamard(f, c_prev) + hadamard(i, cand);
  auto h = hadamard(o, tanh(c));
  return {h, c};
}

template <class S>
LstmState<S> lstm_zero_state(Graph<S>& g, Eigen::Index batch, Eigen::Index hidden) {
  return {g.constant(Matrix<S>::Zero(batch, hidden)), g.constant(Matrix<S>::Zero(batch, hidden))};
}

// Runs the cell over a time-major sequence from a zero state; returns h_t per step.
template <class S>
Sequence<S> lstm_sequence(Graph<S>& g, const LstmParams<S>& p, const Sequence<S>& xs) {
  if (xs.empty()) throw ShapeError("lstm over an empty sequence");
  auto state = lstm_zero_state(g, xs.front().rows(), p.hidden_dim());
  Sequence<S> hs;
  hs.reserve(xs.size());
  for (const auto& x : xs) {
    state = lstm_cell(g, p, x, state.h, state.c);
    hs.push_back(state.h);
  }
  return hs;
}

}  // namespace afca
