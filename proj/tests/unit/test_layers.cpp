#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "afca/layers.hpp"
#include "afca/numcore.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace afca;
using G = Graph<double>;

namespace {

std::vector<double> row_vec(const MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

// Perturbs every parameter so no layer sits at its symmetric initialization.
template <class P>
void randomize(P& params, std::uint64_t seed, double spread = 1.0) {
  ParamList<double> list;
  params.collect(list, "p");
  for (auto& ref : list) {
    *ref.value = test::random_matrix(ref.value->rows(), ref.value->cols(), seed++) * spread;
  }
}

template <class P>
std::vector<MatrixXd*> pointers(P& params) {
  ParamList<double> list;
  params.collect(list, "p");
  std::vector<MatrixXd*> out;
  for (auto& ref : list) out.push_back(ref.value);
  return out;
}

}  // namespace

TEST(Linear, Examples) {
  G g;
  LinearParams<double> id{MatrixXd::Identity(3, 3), MatrixXd::Zero(1, 3)};
  const MatrixXd x = test::random_matrix(2, 3, 1);
  EXPECT_EQ(linear_forward(g, id, g.constant(x)).value(), x);

  LinearParams<double> p{MatrixXd::Ones(1, 2), MatrixXd::Ones(1, 1)};
  MatrixXd in(1, 2);
  in << 2, 3;
  EXPECT_EQ(linear_forward(g, p, g.constant(in)).value()(0, 0), 6.0);
  EXPECT_THROW(linear_forward(g, p, g.constant(MatrixXd::Zero(1, 3))), ShapeError);
}

TEST(Linear, GradCheck) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitMix64 rng(seed);
    auto p = LinearParams<double>::init(4, 3, rng);
    MatrixXd x = test::random_matrix(5, 4, 100 + seed);
    auto ptrs = pointers(p);
    ptrs.push_back(&x);
    auto fn = [&](G& g) { return sum(square(linear_forward(g, p, g.parameter(x)))); };
    EXPECT_LT(grad_check<double>(fn, ptrs, 1e-5), 1e-4);
  }
}

TEST(Lstm, ZeroParametersGiveZeroHidden) {
  SplitMix64 rng(1);
  auto p = LstmParams<double>::init(3, 4, rng);
  ParamList<double> list;
  p.collect(list, "lstm");
  for (auto& ref : list) ref.value->setZero();
  G g;
  auto st = lstm_cell(g, p, g.constant(test::random_matrix(2, 3, 5)), g.constant(MatrixXd::Zero(2, 4)),
                      g.constant(MatrixXd::Zero(2, 4)));
  EXPECT_EQ(st.h.value().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(st.c.value().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lstm, SaturatedForgetGateKeepsCell) {
  SplitMix64 rng(1);
  auto p = LstmParams<double>::init(2, 3, rng);
  ParamList<double> list;
  p.collect(list, "lstm");
  for (auto& ref : list) ref.value->setZero();
  p.b_f.setConstant(10.0);
  G g;
  const MatrixXd c_prev = MatrixXd::Constant(1, 3, 50.0);
  auto st = lstm_cell(g, p, g.constant(test::random_matrix(1, 2, 9)), g.constant(MatrixXd::Zero(1, 3)),
                      g.constant(c_prev));
  // c = sigmoid(10) * c_prev + 0.5 * tanh(0)
  EXPECT_LT((st.c.value() - c_prev).cwiseAbs().maxCoeff() / 50.0, 1e-4);
}

TEST(Lstm, ForgetBiasInitializedToOne) {
  SplitMix64 rng(3);
  auto p = LstmParams<double>::init(2, 5, rng);
  EXPECT_EQ(p.b_f, MatrixXd::Ones(1, 5));
}

TEST(Lstm, GradCheckAndBoundedHidden) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitMix64 rng(seed);
    auto p = LstmParams<double>::init(4, 4, rng);
    randomize(p, 10 * seed);
    MatrixXd x = test::random_matrix(2, 4, 500 + seed);
    MatrixXd h0 = test::random_matrix(2, 4, 600 + seed);
    MatrixXd c0 = test::random_matrix(2, 4, 700 + seed) * 3.0;
    auto ptrs = pointers(p);
    ptrs.insert(ptrs.end(), {&x, &h0, &c0});
    auto fn = [&](G& g) {
      auto st = lstm_cell(g, p, g.parameter(x), g.parameter(h0), g.parameter(c0));
      return sum(square(st.h)) + sum(st.c);
    };
    EXPECT_LT(grad_check<double>(fn, ptrs, 1e-5), 1e-4);
    G g;
    Sequence<double> xs;
    for (int t = 0; t < 20; ++t) xs.push_back(g.constant(test::random_matrix(2, 4, 900 + seed * 20 + t) * 20.0));
    for (const auto& h : lstm_sequence(g, p, xs)) EXPECT_LT(h.value().cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(AfAttention, SingleStepIsGatedValue) {
  SplitMix64 rng(4);
  auto p = AfAttentionParams<double>::init(3, 3, rng);
  const MatrixXd X = test::random_matrix(1, 3, 2);
  const MatrixXd out = af_attention(p, X);
  const MatrixXd x = X * p.W_x.transpose() + p.b_x;
  const MatrixXd q = x * p.W_q.transpose(), v = x * p.W_v.transpose();
  for (Eigen::Index f = 0; f < 3; ++f) EXPECT_NEAR(out(0, f), oracle::logistic(q(0, f)) * v(0, f), 1e-15);
}

TEST(AfAttention, NegativeQueryClosesGate) {
  SplitMix64 rng(4);
  auto p = AfAttentionParams<double>::init(2, 2, rng);
  p.W_x = MatrixXd::Identity(2, 2);
  p.b_x.setZero();
  p.W_q = MatrixXd::Identity(2, 2) * 1e3;
  const MatrixXd X = MatrixXd::Constant(4, 2, -1.0);
  EXPECT_LT(af_attention(p, X).cwiseAbs().maxCoeff(), 1e-200);
}

TEST(AfAttention, MatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SplitMix64 rng(seed);
    auto p = AfAttentionParams<double>::init(3, 3, rng);
    const MatrixXd X = test::random_matrix(5, 3, 40 + seed) * 2.0;
    const auto ref = oracle::af_attention(oracle::to_grid(X), oracle::to_grid(p.W_x), row_vec(p.b_x),
                                          oracle::to_grid(p.W_q), oracle::to_grid(p.W_k), oracle::to_grid(p.W_v));
    EXPECT_LT(oracle::max_abs_diff(ref, af_attention(p, X)), 1e-12);
  }
}

TEST(AfAttention, TimePermutationEquivariance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitMix64 rng(seed);
    auto p = AfAttentionParams<double>::init(4, 3, rng);
    const MatrixXd X = test::random_matrix(6, 4, 80 + seed);
    std::vector<Eigen::Index> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    MatrixXd Xp(6, 4);
    for (Eigen::Index t = 0; t < 6; ++t) Xp.row(t) = X.row(perm[static_cast<std::size_t>(t)]);
    const MatrixXd out = af_attention(p, X), outp = af_attention(p, Xp);
    for (Eigen::Index t = 0; t < 6; ++t) {
      EXPECT_LT((outp.row(t) - out.row(perm[static_cast<std::size_t>(t)])).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(AfAttention, EmptySequenceRejected) {
  SplitMix64 rng(1);
  auto p = AfAttentionParams<double>::init(2, 2, rng);
  G g;
  EXPECT_THROW(af_attention(g, p, Sequence<double>{}), ShapeError);
}

TEST(AfAttention, GradCheck) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitMix64 rng(seed);
    auto p = AfAttentionParams<double>::init(3, 4, rng);
    randomize(p, 30 * seed);
    MatrixXd X = test::random_matrix(4, 3, 300 + seed);
    const MatrixXd w = test::random_matrix(4, 4, 400 + seed);
    auto ptrs = pointers(p);
    ptrs.push_back(&X);
    auto fn = [&](G& g) {
      Sequence<double> xs;
      auto Xv = g.parameter(X);
      for (Eigen::Index t = 0; t < 4; ++t) xs.push_back(slice(Xv, t, 1, 0, 3));
      Var<double> acc = g.constant(MatrixXd::Zero(1, 1));
      auto out = af_attention(g, p, xs);
      for (Eigen::Index t = 0; t < 4; ++t) acc = acc + sum(hadamard(out[static_cast<std::size_t>(t)], g.constant(w.row(t))));
      return acc;
    };
    EXPECT_LT(grad_check<double>(fn, ptrs, 1e-5), 1e-4);
  }
}

TEST(Aft, SingleStepAndLengthLimit) {
  SplitMix64 rng(2);
  auto p = AftParams<double>::init(3, 4, rng);
  p.w = test::random_matrix(4, 4, 3);
  const MatrixXd Z = test::random_matrix(1, 3, 5);
  const MatrixXd out = aft_block(p, Z);
  const MatrixXd q = Z * p.W_q.transpose(), v = Z * p.W_v.transpose();
  for (Eigen::Index f = 0; f < 3; ++f) EXPECT_NEAR(out(0, f), oracle::logistic(q(0, f)) * v(0, f), 1e-15);
  EXPECT_THROW(aft_block(p, test::random_matrix(5, 3, 6)), ShapeError);
}

TEST(Aft, MatchesDoubleLoopOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SplitMix64 rng(seed);
    auto p = AftParams<double>::init(3, 6, rng);
    p.w = test::random_matrix(6, 6, 60 + seed) * 2.0;
    const MatrixXd Z = test::random_matrix(4, 3, 70 + seed) * 2.0;
    const auto ref = oracle::aft(oracle::to_grid(Z), oracle::to_grid(p.W_q), oracle::to_grid(p.W_k),
                                 oracle::to_grid(p.W_v), oracle::to_grid(p.w));
    EXPECT_LT(oracle::max_abs_diff(ref, aft_block(p, Z)), 1e-12);
  }
}

TEST(Aft, ZeroBiasContextIsTimeConstant) {
  SplitMix64 rng(8);
  auto p = AftParams<double>::init(4, 6, rng);
  G g;
  auto terms = aft_terms(g, p, constant_sequence(g, test::random_matrix(6, 4, 1)));
  for (const auto& c : terms.contexts) {
    EXPECT_LT((c.value() - terms.contexts.front().value()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Aft, GradCheck) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitMix64 rng(seed);
    auto p = AftParams<double>::init(3, 4, rng);
    randomize(p, 40 * seed);
    MatrixXd Z = test::random_matrix(4, 3, 200 + seed);
    const MatrixXd w = test::random_matrix(4, 3, 210 + seed);
    auto ptrs = pointers(p);
    ptrs.push_back(&Z);
    auto fn = [&](G& g) {
      auto Zv = g.parameter(Z);
      Sequence<double> zs;
      for (Eigen::Index t = 0; t < 4; ++t) zs.push_back(slice(Zv, t, 1, 0, 3));
      auto out = aft_block(g, p, zs);
      Var<double> acc = g.constant(MatrixXd::Zero(1, 1));
      for (Eigen::Index t = 0; t < 4; ++t) acc = acc + sum(hadamard(out[static_cast<std::size_t>(t)], g.constant(w.row(t))));
      return acc;
    };
    EXPECT_LT(grad_check<double>(fn, ptrs, 1e-5), 1e-4);
  }
}

TEST(AfLstm, OutputShape) {
  SplitMix64 rng(5);
  auto p = AfLstmLayerParams<double>::init(20, 32, 1, 8, rng);
  G g;
  auto out = af_lstm_layer(g, p, constant_sequence(g, test::random_matrix(8, 20, 2)));
  EXPECT_EQ(stack_rows(out.outputs).rows(), 8);
  EXPECT_EQ(stack_rows(out.outputs).cols(), 1);
  EXPECT_EQ(out.final_hidden.cols(), 32);
  EXPECT_THROW(af_lstm_layer(g, p, constant_sequence(g, test::random_matrix(9, 20, 2))), ShapeError);
}

TEST(AfLstm, ClosedGateReducesToLstmOnConstantInput) {
  SplitMix64 rng(6);
  auto p = AfLstmLayerParams<double>::init(3, 4, 2, 8, rng);
  // Channel 1 normalizes to a constant -1, which ReLU zeroes.
  p.ln1.psi.setZero();
  p.ln1.phi.setConstant(-1.0);
  p.ln3.phi = test::random_matrix(1, 4, 12);
  G g;
  const MatrixXd X = test::random_matrix(5, 3, 7);
  auto out = af_lstm_layer(g, p, constant_sequence(g, X));

  G ref;
  Sequence<double> zeta;
  for (int t = 0; t < 5; ++t) zeta.push_back(ref.constant(p.ln3.phi));
  const auto hs = lstm_sequence(ref, p.lstm, zeta);
  for (std::size_t t = 0; t < 5; ++t) {
    const MatrixXd expected = hs[t].value() * p.out.W.transpose() + p.out.b;
    EXPECT_LT((out.outputs[t].value() - expected).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(AfLstm, GradCheck) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitMix64 rng(seed);
    auto p = AfLstmLayerParams<double>::init(4, 4, 2, 3, rng);
    randomize(p, 100 * seed);
    MatrixXd X = test::random_matrix(3, 4, 800 + seed);
    auto ptrs = pointers(p);
    ptrs.push_back(&X);
    const MatrixXd w = test::random_matrix(3, 2, 850 + seed);
    auto fn = [&](G& g) {
      auto Xv = g.parameter(X);
      Sequence<double> xs;
      for (Eigen::Index t = 0; t < 3; ++t) xs.push_back(slice(Xv, t, 1, 0, 4));
      auto out = af_lstm_layer(g, p, xs);
      Var<double> acc = g.constant(MatrixXd::Zero(1, 1));
      for (Eigen::Index t = 0; t < 3; ++t) acc = acc + sum(hadamard(out.outputs[static_cast<std::size_t>(t)], g.constant(w.row(t))));
      return acc;
    };
    EXPECT_LT(grad_check<double>(fn, ptrs, 1e-5), 1e-4) << "seed " << seed;
  }
}

TEST(Layers, ForwardIsDeterministic) {
  SplitMix64 r1(9), r2(9);
  auto p1 = AfLstmLayerParams<double>::init(3, 5, 1, 6, r1);
  auto p2 = AfLstmLayerParams<double>::init(3, 5, 1, 6, r2);
  const MatrixXd X = test::random_matrix(6, 3, 1);
  G g1, g2;
  auto o1 = af_lstm_layer(g1, p1, constant_sequence(g1, X));
  auto o2 = af_lstm_layer(g2, p2, constant_sequence(g2, X));
  EXPECT_EQ(stack_rows(o1.outputs), stack_rows(o2.outputs));
}
