#pragma once

#include "afca/layers/params.hpp"
#include "afca/numcore/ops.hpp"

namespace afca {

// Attention-free channel: x_t = W_x X_t + b_x; Q, K, V = W_{q,k,v} x_t;
// eta = sum_t softmax_t(K) * V (softmax over time, per feature);
// output_t = sigmoid(Q_t) * eta.
template <class S>
struct AfAttentionParams {
  Matrix<S> W_x;  // dim x in
  Matrix<S> b_x;  // 1 x dim
  Matrix<S> W_q, W_k, W_v;  // dim x dim

  static AfAttentionParams init(Eigen::Index in, Eigen::Index dim, SplitMix64& rng) {
    AfAttentionParams p;
    p.W_x = uniform_init<S>(dim, in, in, rng);
    p.b_x = uniform_init<S>(1, dim, in, rng);
    p.W_q = uniform_init<S>(dim, dim, dim, rng);
    p.W_k = uniform_init<S>(dim, dim, dim, rng);
    p.W_v = uniform_init<S>(dim, dim, dim, rng);
    return p;
  }

  Eigen::Index in_dim() const { return W_x.cols(); }
  Eigen::Index dim() const { return W_x.rows(); }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".W_x", &W_x, ParamRole::Weight});
    out.push_back({prefix + ".b_x", &b_x, ParamRole::Bias});
    out.push_back({prefix + ".W_q", &W_q, ParamRole::Weight});
    out.push_back({prefix + ".W_k", &W_k, ParamRole::Weight});
    out.push_back({prefix + ".W_v", &W_v, ParamRole::Weight});
  }
};

// Elementwise maximum over a sequence, as a gradient-free constant. Softmax is
// shift invariant, so subtracting it changes no gradient.
template <class S>
Var<S> sequence_max(Graph<S>& g, const Sequence<S>& xs) {
  Matrix<S> m = xs.front().value();
  for (std::size_t t = 1; t < xs.size(); ++t) m = m.cwiseMax(xs[t].value());
  return g.constant(std::move(m));
}

// sum_t softmax_t(logits) * values, softmax taken across the sequence
// independently for every (row, feature) entry.
template <class S>
Var<S> softmax_pool(Graph<S>& g, const Sequence<S>& logits, const Sequence<S>& values) {
  const auto shift = sequence_max(g, logits);
  Var<S> num{}, den{};
  for (std::size_t t = 0; t < logits.size(); ++t) {
    auto e = exp(logits[t] - shift);
    auto ev = hadamard(e, values[t]);
    num = t == 0 ? ev : num + ev;
    den = t == 0 ? e : den + e;
  }
  return num / den;
}

template <class S>
Sequence<S> af_attention(Graph<S>& g, const AfAttentionParams<S>& p, const Sequence<S>& X) {
  if (X.empty()) throw ShapeError("af_attention over an empty sequence");
  const auto Wx = g.parameter(p.W_x), bx = g.parameter(p.b_x);
  const auto Wq = g.parameter(p.W_q), Wk = g.parameter(p.W_k), Wv = g.parameter(p.W_v);
  Sequence<S> Q, K, V;
  for (const auto& xt : X) {
    if (xt.cols() != p.in_dim()) {
      throw ShapeError("af_attention: step " + shape_str(xt.value()) + " but channel expects " +
                       std::to_string(p.in_dim()) + " features");
    }
    auto x = affine(xt, Wx, bx);
    Q.push_back(project(x, Wq));
    K.push_back(project(x, Wk));
    V.push_back(project(x, Wv));
  }
  const auto eta = softmax_pool(g, K, V);
  Sequence<S> out;
  out.reserve(X.size());
  for (const auto& q : Q) out.push_back(hadamard(sigmoid(q), eta));
  return out;
}

// Single-sequence convenience: X is (T x in), result is (T x dim).
template <class S>
Matrix<S> af_attention(const AfAttentionParams<S>& p, const Matrix<S>& X) {
  Graph<S> g;
  return stack_rows(af_attention(g, p, constant_sequence(g, X)));
}

}  // namespace afca
