#pragma once

#include "afca/layers/af_attention.hpp"
#include "afca/layers/linear.hpp"
#include "afca/layers/lstm.hpp"
#include "afca/numcore/norm.hpp"

namespace afca {

// Two attention-free channels gate each other before an LSTM:
//   x~ = ReLU(LN1(AF1(X))),  x- = LN2(AF2(X)),  zeta = LN3(x~ * x-),
//   h = LSTM(zeta),  out_t = W_y h_t + b_y.
// Channel width equals the LSTM hidden width.
template <class S>
struct AfLstmLayerParams {
  AfAttentionParams<S> af1;
  AfAttentionParams<S> af2;
  NormParams<S> ln1, ln2, ln3;
  LstmParams<S> lstm;
  LinearParams<S> out;  // W_y, b_y
  Eigen::Index max_len = 0;

  static AfLstmLayerParams init(Eigen::Index in, Eigen::Index hidden, Eigen::Index out_dim,
                                Eigen::Index max_len, SplitMix64& rng) {
    AfLstmLayerParams p;
    p.af1 = AfAttentionParams<S>::init(in, hidden, rng);
    p.af2 = AfAttentionParams<S>::init(in, hidden, rng);
    p.ln1 = NormParams<S>::init(hidden);
    p.ln2 = NormParams<S>::init(hidden);
    p.ln3 = NormParams<S>::init(hidden);
    p.lstm = LstmParams<S>::init(hidden, hidden, rng);
    p.out = LinearParams<S>::init(hidden, out_dim, rng);
    p.max_len = max_len;
    return p;
  }

  Eigen::Index in_dim() const { return af1.in_dim(); }
  Eigen::Index hidden_dim() const { return lstm.hidden_dim(); }
  Eigen::Index out_dim() const { return out.out_dim(); }

  void collect(ParamList<S>& list, const std::string& prefix) {
    af1.collect(list, prefix + ".af1");
    af2.collect(list, prefix + ".af2");
    ln1.collect(list, prefix + ".ln1");
    ln2.collect(list, prefix + ".ln2");
    ln3.collect(list, prefix + ".ln3");
    lstm.collect(list, prefix + ".lstm");
    out.collect(list, prefix + ".out");
  }
};

template <class S>
struct AfLstmOutput {
  Sequence<S> outputs;  // out_t per step
  Var<S> final_hidden;
};

template <class S>
AfLstmOutput<S> af_lstm_layer(Graph<S>& g, const AfLstmLayerParams<S>& p, const Sequence<S>& X) {
  if (X.empty()) throw ShapeError("af_lstm_layer over an empty sequence");
  if (p.max_len > 0 && static_cast<Eigen::Index>(X.size()) > p.max_len) {
    throw ShapeError("af_lstm_layer: sequence length " + std::to_string(X.size()) + " exceeds max length " +
                     std::to_string(p.max_len));
  }
  if (p.af1.dim() != p.af2.dim() || p.lstm.in_dim() != p.af1.dim()) {
    throw ShapeError("af_lstm_layer: channel widths do not match the LSTM input");
  }
  const auto ch1 = af_attention(g, p.af1, X);
  const auto ch2 = af_attention(g, p.af2, X);
  const auto psi1 = g.parameter(p.ln1.psi), phi1 = g.parameter(p.ln1.phi);
  const auto psi2 = g.parameter(p.ln2.psi), phi2 = g.parameter(p.ln2.phi);
  const auto psi3 = g.parameter(p.ln3.psi), phi3 = g.parameter(p.ln3.phi);
  Sequence<S> zeta;
  zeta.reserve(X.size());
  for (std::size_t t = 0; t < X.size(); ++t) {
    auto gate = relu(layer_norm(ch1[t], psi1, phi1));
    auto value = layer_norm(ch2[t], psi2, phi2);
    zeta.push_back(layer_norm(hadamard(gate, value), psi3, phi3));
  }
  const auto hs = lstm_sequence(g, p.lstm, zeta);
  AfLstmOutput<S> result;
  result.outputs.reserve(hs.size());
  for (const auto& h : hs) result.outputs.push_back(linear_forward(g, p.out, h));
  result.final_hidden = hs.back();
  return result;
}

}  // namespace afca
