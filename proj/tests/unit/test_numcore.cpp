#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "afca/numcore.hpp"
#include "test_support.hpp"

using namespace afca;
using G = Graph<double>;
using V = Var<double>;

namespace {

MatrixXd row(std::initializer_list<double> xs) {
  MatrixXd m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

}  // namespace

TEST(Tensor, RejectsShapeMismatchAndNonFinite) {
  EXPECT_THROW(Tensor<double>({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(Tensor<double>({2}, {1.0, std::nan("")}), DataError);
  EXPECT_THROW(Tensor<double>({1}, {INFINITY}), DataError);
  Tensor<double> t({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  EXPECT_EQ(t(1, 0, 1), 5.0);
  EXPECT_EQ(t.flat_view().rows(), 2);
  EXPECT_EQ(t.flat_view().cols(), 4);
}

TEST(Ops, ForwardExamples) {
  G g;
  auto sm = softmax(g.constant(row({0, 0, 0})));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sm.value()(0, i), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(sigmoid(g.constant(row({0}))).value()(0, 0), 0.5);
  auto r = relu(g.constant(row({-2, 0, 3})));
  EXPECT_EQ(r.value(), row({0, 0, 3}));
  MatrixXd A = test::random_matrix(3, 4, 7);
  auto prod = matmul(g.constant(MatrixXd::Identity(3, 3)), g.constant(A));
  EXPECT_EQ(prod.value(), A);
}

TEST(Ops, ShapeErrorsNameBothShapes) {
  G g;
  try {
    matmul(g.constant(MatrixXd::Zero(2, 3)), g.constant(MatrixXd::Zero(2, 3)));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("(2x3)"), std::string::npos);
  }
  try {
    auto s = g.constant(MatrixXd::Zero(2, 3)) + g.constant(MatrixXd::Zero(3, 2));
    (void)s;
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(2x3)"), std::string::npos);
    EXPECT_NE(msg.find("(3x2)"), std::string::npos);
  }
  EXPECT_THROW(softmax(g.constant(MatrixXd(2, 0))), ShapeError);
}

TEST(Ops, ScalarAndRowBroadcast) {
  G g;
  auto a = g.constant(MatrixXd::Ones(2, 3));
  auto s = a + g.constant(row({2}));
  EXPECT_EQ(s.value(), MatrixXd::Constant(2, 3, 3.0));
  auto rb = a + g.constant(row({1, 2, 3}));
  EXPECT_EQ(rb.value()(1, 2), 4.0);
}

TEST(Backward, QuadraticAndReluExamples) {
  G g;
  auto x = g.variable(row({1, 2}));
  g.backward(sum(hadamard(x, x)));
  EXPECT_EQ(x.grad(), row({2, 4}));

  G g2;
  auto y = g2.variable(row({-1, 1}));
  g2.backward(sum(relu(y)));
  EXPECT_EQ(y.grad(), row({0, 1}));

  G g3;
  auto z = g3.variable(row({0}));
  g3.backward(sum(relu(z)));
  EXPECT_EQ(z.grad()(0, 0), 0.0);
}

TEST(Backward, NonScalarRootRejected) {
  G g;
  auto x = g.variable(row({1, 2}));
  EXPECT_THROW(g.backward(x), ShapeError);
}

TEST(Backward, RepeatedCallsAccumulate) {
  G g;
  auto x = g.variable(row({1, 2}));
  auto root = sum(hadamard(x, x));
  g.backward(root);
  g.backward(root);
  EXPECT_EQ(x.grad(), row({4, 8}));
  g.zero_grad();
  g.backward(root);
  EXPECT_EQ(x.grad(), row({2, 4}));
}

TEST(Backward, LeafUsedTwiceAccumulatesBothPaths) {
  MatrixXd p = test::random_matrix(2, 3, 11);
  MatrixXd* params[] = {&p};
  auto fn = [&](G& g) {
    auto x = g.parameter(p);
    return sum(hadamard(tanh(x), sigmoid(x)) + scale(exp(x), 0.5));
  };
  EXPECT_LT(grad_check<double>(fn, params, 1e-5), 1e-4);
  G g;
  auto x1 = g.parameter(p);
  auto x2 = g.parameter(p);
  EXPECT_EQ(x1.id, x2.id);
}

TEST(GradCheck, ClosedFormExamples) {
  const double e1 = grad_check<double>([](G&, V x) { return sum(square(x)); }, row({1, 2, 3}), 1e-5);
  EXPECT_LT(e1, 1e-6);

  G g;
  auto x = g.variable(row({0}));
  g.backward(sum(sigmoid(x)));
  EXPECT_NEAR(x.grad()(0, 0), 0.25, 1e-15);
  const double e2 = grad_check<double>([](G&, V v) { return sum(sigmoid(v)); }, row({0}), 1e-5);
  EXPECT_LT(e2, 1e-6);

  const double e3 = grad_check<double>([](G& gr, V) { return gr.constant(row({3.5})); }, row({1, 2}), 1e-5);
  EXPECT_EQ(e3, 0.0);
}

// Every primitive at 10 seeded random points.
TEST(GradCheck, EveryPrimitive) {
  using Fn = std::function<V(G&, V)>;
  const MatrixXd other = test::random_matrix(3, 4, 99);
  const MatrixXd rhs = test::random_matrix(4, 2, 98);
  const MatrixXd bias = test::random_matrix(1, 4, 97);
  const std::vector<std::pair<std::string, Fn>> cases = {
      {"matmul", [&](G& g, V x) { return sum(matmul(x, g.constant(rhs))); }},
      {"matmul_rhs", [&](G& g, V x) { return sum(square(matmul(g.constant(rhs.transpose()), transpose(x)))); }},
      {"add", [&](G& g, V x) { return sum(square(x + g.constant(other))); }},
      {"add_row_broadcast", [&](G& g, V x) { return sum(square(g.constant(other) + slice(x, 0, 1, 0, 4))); }},
      {"sub", [&](G& g, V x) { return sum(square(g.constant(other) - x)); }},
      {"hadamard", [&](G& g, V x) { return sum(hadamard(x, hadamard(x, g.constant(other)))); }},
      {"div", [&](G& g, V x) { return sum(g.constant(other) / (square(x) + g.constant(row({1.0})))); }},
      {"concat", [&](G& g, V x) { return sum(square(concat<double>({x, g.constant(other), x}))); }},
      {"sum_axis0", [&](G&, V x) { return sum(square(sum(x, 0))); }},
      {"sum_axis1", [&](G&, V x) { return sum(square(sum(x, 1))); }},
      {"sigmoid", [&](G&, V x) { return sum(square(sigmoid(x))); }},
      {"tanh", [&](G&, V x) { return sum(square(tanh(x))); }},
      {"relu", [&](G&, V x) { return sum(square(relu(x))); }},
      {"softmax", [&](G& g, V x) { return sum(hadamard(softmax(x), g.constant(other))); }},
      {"exp", [&](G&, V x) { return sum(exp(x)); }},
      {"log", [&](G&, V x) { return sum(log(square(x) + x.graph->constant(row({1.0})))); }},
      {"abs", [&](G&, V x) { return sum(square(abs(x))); }},
      {"repeat_rows", [&](G& g, V x) { return sum(hadamard(repeat_rows(x, 2), g.constant(test::random_matrix(6, 4, 5)))); }},
      {"reshape", [&](G& g, V x) { return sum(hadamard(reshape(x, 4, 3), g.constant(test::random_matrix(4, 3, 6)))); }},
      {"affine", [&](G& g, V x) { return sum(square(affine(x, g.constant(test::random_matrix(2, 4, 8)), g.constant(row({0.1, -0.3}))))); }},
      {"layer_norm", [&](G& g, V x) {
         return sum(hadamard(layer_norm(x, g.constant(bias), g.constant(bias * 0.5), 1e-5), g.constant(other)));
       }},
  };
  for (const auto& [name, fn] : cases) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const MatrixXd point = test::random_matrix(3, 4, 1000 + seed);
      EXPECT_LT(grad_check<double>(fn, point, 1e-5), 1e-4) << name << " seed " << seed;
    }
  }
}

TEST(GradCheck, NormalizationParametersAndBatchNorm) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MatrixXd x = test::random_matrix(5, 3, 200 + seed);
    MatrixXd psi = test::random_matrix(1, 3, 300 + seed);
    MatrixXd phi = test::random_matrix(1, 3, 400 + seed);
    MatrixXd w = test::random_matrix(5, 3, 500 + seed);
    MatrixXd* params[] = {&x, &psi, &phi};
    auto ln = [&](G& g) {
      return sum(hadamard(layer_norm(g.parameter(x), g.parameter(psi), g.parameter(phi), 1e-5), g.constant(w)));
    };
    EXPECT_LT(grad_check<double>(ln, params, 1e-5), 1e-4);
    auto bn = [&](G& g) {
      BatchNormState<double> st;
      return sum(hadamard(batch_norm(g.parameter(x), g.parameter(psi), g.parameter(phi), st, NormMode::Train),
                          g.constant(w)));
    };
    EXPECT_LT(grad_check<double>(bn, params, 1e-5), 1e-4);
  }
}

TEST(Softmax, NormalizedAndShiftInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatrixXd x = test::random_matrix(4, 6, seed) * 10.0;
    const MatrixXd y = softmax_rows(x);
    const MatrixXd y_shift = softmax_rows(MatrixXd(x.array() + 123.456));
    EXPECT_GE(y.minCoeff(), 0.0);
    for (Eigen::Index r = 0; r < y.rows(); ++r) EXPECT_NEAR(y.row(r).sum(), 1.0, 1e-12);
    EXPECT_LT((y - y_shift).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LayerNorm, Examples) {
  const MatrixXd one = MatrixXd::Ones(1, 3), zero = MatrixXd::Zero(1, 3);
  const MatrixXd y = layer_norm<double>(row({-1, 0, 1}), one, zero, 0.0);
  EXPECT_NEAR(y(0, 0), -1.224744871391589, 1e-12);
  EXPECT_NEAR(y(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(y(0, 2), 1.224744871391589, 1e-12);

  const MatrixXd phi = row({0.3, -0.2, 0.7});
  const MatrixXd c = layer_norm<double>(row({4, 4, 4}), one, phi, 1e-5);
  EXPECT_LT((c - phi).cwiseAbs().maxCoeff(), 1e-12);

  // psi = sigma, phi = mu inverts the normalization.
  const MatrixXd x = row({2.0, -1.0, 0.5, 3.0});
  const double mu = x.mean();
  const double sd = std::sqrt((x.array() - mu).square().mean());
  const MatrixXd back = layer_norm<double>(x, MatrixXd::Constant(1, 4, sd), MatrixXd::Constant(1, 4, mu), 0.0);
  EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LayerNorm, StandardizesEverySlice) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatrixXd x = test::random_matrix(3, 7, seed) * 5.0;
    const MatrixXd y = layer_norm<double>(x, MatrixXd::Ones(1, 7), MatrixXd::Zero(1, 7), 0.0);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      EXPECT_NEAR(y.row(r).mean(), 0.0, 1e-12);
      EXPECT_NEAR(y.row(r).array().square().mean(), 1.0, 1e-10);
    }
  }
}

TEST(BatchNorm, Examples) {
  G g;
  BatchNormState<double> st;
  st.eps = 0.0;
  MatrixXd x(2, 1);
  x << 0, 2;
  auto y = batch_norm(g.constant(x), g.constant(row({1})), g.constant(row({0})), st, NormMode::Train);
  EXPECT_NEAR(y.value()(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(y.value()(1, 0), 1.0, 1e-15);
  // running stats: (1-0.1)*0 + 0.1*1 and (1-0.1)*1 + 0.1*1
  EXPECT_NEAR(st.running_mean(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(st.running_var(0, 0), 1.0, 1e-15);

  BatchNormState<double> st2;
  const MatrixXd same = MatrixXd::Constant(4, 2, 3.0);
  auto z = batch_norm(g.constant(same), g.constant(row({2, 2})), g.constant(row({0.5, -1})), st2, NormMode::Train);
  for (Eigen::Index r = 0; r < 4; ++r) {
    EXPECT_NEAR(z.value()(r, 0), 0.5, 1e-12);
    EXPECT_NEAR(z.value()(r, 1), -1.0, 1e-12);
  }
}

TEST(BatchNorm, EvalBeforeTrainFails) {
  G g;
  BatchNormState<double> st;
  EXPECT_THROW(batch_norm(g.constant(MatrixXd::Ones(2, 1)), g.constant(row({1})), g.constant(row({0})), st,
                          NormMode::Eval),
               StateError);
}

TEST(L1Penalty, Examples) {
  const MatrixXd zero = MatrixXd::Zero(2, 2);
  const MatrixXd w = row({1, -2});
  const MatrixXd* zs[] = {&zero};
  const MatrixXd* ws[] = {&w};
  EXPECT_EQ(l1_penalty<double>(zs, 0.01), 0.0);
  EXPECT_NEAR(l1_penalty<double>(ws, 0.01), 0.03, 1e-15);
  EXPECT_THROW(l1_penalty<double>(ws, -1.0), ConfigError);

  G g;
  auto pen = l1_penalty<double>(g, ws, 0.01);
  EXPECT_NEAR(pen.value()(0, 0), 0.03, 1e-15);
  g.backward(pen);
  EXPECT_EQ(*g.grad_of(w), row({0.01, -0.01}));

  G g0;
  auto pen0 = l1_penalty<double>(g0, zs, 0.5);
  g0.backward(pen0);
  EXPECT_EQ(g0.grad_of(zero)->cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adam, ZeroGradientLeavesParamsAlone) {
  MatrixXd p = test::random_matrix(2, 2, 3);
  const MatrixXd before = p;
  AdamState<double> st;
  MatrixXd* ps[] = {&p};
  const MatrixXd gs[] = {MatrixXd::Zero(2, 2)};
  adam_step<double>(ps, gs, st);
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step_count, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  MatrixXd p = row({0.0});
  AdamState<double> st;
  EXPECT_EQ(st.lr, 0.001);
  MatrixXd* ps[] = {&p};
  const MatrixXd gs[] = {row({1.0})};
  adam_step<double>(ps, gs, st);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p(0, 0), -0.001 / (1.0 + 1e-8), 1e-18);
}

TEST(Adam, RejectsNonFiniteAndIsDeterministic) {
  MatrixXd p = row({1.0, 2.0});
  AdamState<double> st;
  MatrixXd* ps[] = {&p};
  const MatrixXd bad[] = {row({1.0, NAN})};
  EXPECT_THROW(adam_step<double>(ps, bad, st), NumericError);
  EXPECT_EQ(p, row({1.0, 2.0}));

  MatrixXd a = test::random_matrix(3, 3, 1), b = a;
  AdamState<double> sa, sb;
  MatrixXd* pa[] = {&a};
  MatrixXd* pb[] = {&b};
  for (int k = 0; k < 5; ++k) {
    const MatrixXd grad[] = {test::random_matrix(3, 3, 50 + static_cast<std::uint64_t>(k))};
    adam_step<double>(pa, grad, sa);
    adam_step<double>(pb, grad, sb);
  }
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * 9));
}

TEST(Adam, DecreasesQuadratic) {
  MatrixXd p = row({0.7, -1.3});
  AdamState<double> st;
  auto f = [](const MatrixXd& x) { return x.squaredNorm(); };
  const double before = f(p);
  MatrixXd* ps[] = {&p};
  const MatrixXd gs[] = {2.0 * p};
  adam_step<double>(ps, gs, st);
  EXPECT_LT(f(p), before);
}
