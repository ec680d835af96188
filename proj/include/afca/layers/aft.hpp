#pragma once

#include "afca/layers/af_attention.hpp"

namespace afca {

// Attention-free transformer block with learned pairwise position biases:
// Y_t = sigmoid(Q_t) * sum_t' exp(K_t' + w[t,t']) V_t' / sum_t' exp(K_t' + w[t,t']).
template <class S>
struct AftParams {
  Matrix<S> W_q, W_k, W_v;  // dim x dim
  Matrix<S> w;              // max_len x max_len

  static AftParams init(Eigen::Index dim, Eigen::Index max_len, SplitMix64& rng) {
    AftParams p;
    p.W_q = uniform_init<S>(dim, dim, dim, rng);
    p.W_k = uniform_init<S>(dim, dim, dim, rng);
    p.W_v = uniform_init<S>(dim, dim, dim, rng);
    p.w = Matrix<S>::Zero(max_len, max_len);
    return p;
  }

  Eigen::Index dim() const { return W_q.rows(); }
  Eigen::Index max_len() const { return w.rows(); }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".W_q", &W_q, ParamRole::Weight});
    out.push_back({prefix + ".W_k", &W_k, ParamRole::Weight});
    out.push_back({prefix + ".W_v", &W_v, ParamRole::Weight});
    out.push_back({prefix + ".w", &w, ParamRole::PositionBias});
  }
};

// Position-biased context per step, before the sigmoid(Q) gate:
// C_t = sum_t' exp(K_t' + w[t,t']) V_t' / sum_t' exp(K_t' + w[t,t']).
template <class S>
struct AftTerms {
  Sequence<S> queries;
  Sequence<S> contexts;
};

template <class S>
AftTerms<S> aft_terms(Graph<S>& g, const AftParams<S>& p, const Sequence<S>& Z) {
  const auto T = static_cast<Eigen::Index>(Z.size());
  if (T == 0) throw ShapeError("aft_block over an empty sequence");
  if (T > p.max_len()) {
    throw ShapeError("aft_block: sequence length " + std::to_string(T) + " exceeds position-bias side " +
                     std::to_string(p.max_len()));
  }
  const auto Wq = g.parameter(p.W_q), Wk = g.parameter(p.W_k), Wv = g.parameter(p.W_v);
  const auto w = g.parameter(p.w);
  AftTerms<S> terms;
  Sequence<S> K, V;
  for (const auto& z : Z) {
    if (z.cols() != p.dim()) {
      throw ShapeError("aft_block: step " + shape_str(z.value()) + " but block expects " +
                       std::to_string(p.dim()) + " features");
    }
    terms.queries.push_back(project(z, Wq));
    K.push_back(project(z, Wk));
    V.push_back(project(z, Wv));
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    Sequence<S> logits;
    for (Eigen::Index s = 0; s < T; ++s) logits.push_back(K[static_cast<std::size_t>(s)] + element(w, t, s));
    terms.contexts.push_back(softmax_pool(g, logits, V));
  }
  return terms;
}

template <class S>
Sequence<S> aft_block(Graph<S>& g, const AftParams<S>& p, const Sequence<S>& Z) {
  auto terms = aft_terms(g, p, Z);
  Sequence<S> out;
  out.reserve(Z.size());
  for (std::size_t t = 0; t < Z.size(); ++t) out.push_back(hadamard(sigmoid(terms.queries[t]), terms.contexts[t]));
  return out;
}

template <class S>
Matrix<S> aft_block(const AftParams<S>& p, const Matrix<S>& Z) {
  Graph<S> g;
  return stack_rows(aft_block(g, p, constant_sequence(g, Z)));
}

}  // namespace afca
