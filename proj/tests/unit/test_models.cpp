#include <gtest/gtest.h>

#include <algorithm>

#include "afca/models.hpp"
#include "test_support.hpp"

using namespace afca;

namespace {

std::vector<std::size_t> iota_rows(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> r;
  for (auto t = lo; t < hi; ++t) r.push_back(t);
  return r;
}

}  // namespace

TEST(ModelSpec, DepthWidthsAndDefaults) {
  EXPECT_TRUE(beta_hidden_for(Depth::CA0).empty());
  EXPECT_EQ(beta_hidden_for(Depth::CA1), (std::vector<int>{32}));
  EXPECT_EQ(beta_hidden_for(Depth::CA2), (std::vector<int>{32, 16}));
  EXPECT_EQ(beta_hidden_for(Depth::CA3), (std::vector<int>{32, 16, 8}));
  const auto s = ModelSpec::make(Family::Conditional, LayerKind::AfLstm, Depth::CA1, 20, 5);
  EXPECT_EQ(s.beta_hidden, (std::vector<int>{32}));
  EXPECT_FALSE(s.batch_norm);
  EXPECT_EQ(s.window(), 8);
  EXPECT_TRUE(ModelSpec::make(Family::Simple, LayerKind::Linear, Depth::CA0, 20, 5).batch_norm);
  EXPECT_EQ(ModelSpec::make(Family::Conditional, LayerKind::Linear, Depth::CA2, 20, 5).window(), 1);
}

TEST(ModelSpec, RejectsInvalidCombinations) {
  EXPECT_THROW(ModelSpec::make(Family::Simple, LayerKind::Lstm, Depth::CA0, 20, 5), ConfigError);
  EXPECT_THROW(ModelSpec::make(Family::Conditional, LayerKind::Linear, Depth::CA0, 0, 5), ConfigError);
  auto s = ModelSpec::make(Family::Conditional, LayerKind::Linear, Depth::CA1, 20, 5);
  s.beta_hidden = {16};
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(layer_kind_from_string("gru"), ConfigError);
  EXPECT_EQ(layer_kind_from_string("simple"), LayerKind::Linear);
  EXPECT_EQ(depth_from_string("ca3"), Depth::CA3);
}

TEST(Model, BetaNetworkDimensions) {
  // aflstm ca1: one AF-LSTM layer, 5 characteristics -> 32 hidden -> 1 loading
  const auto s = ModelSpec::make(Family::Conditional, LayerKind::AfLstm, Depth::CA1, 20, 5);
  auto m = Model::build(s, 0);
  ASSERT_EQ(m.conditional().beta_aflstm.size(), 1u);
  const auto& layer = m.conditional().beta_aflstm[0];
  EXPECT_EQ(layer.af1.W_x.rows(), 32);
  EXPECT_EQ(layer.af1.W_x.cols(), 5);
  EXPECT_EQ(layer.out.W.rows(), 1);
  EXPECT_EQ(layer.out.W.cols(), 32);
  EXPECT_EQ(m.conditional().factor_net.back().W.rows(), 1);
  EXPECT_EQ(m.conditional().factor_net.back().W.cols(), 20);

  const auto s3 = ModelSpec::make(Family::Conditional, LayerKind::Lstm, Depth::CA3, 4, 5, 2);
  auto m3 = Model::build(s3, 0);
  ASSERT_EQ(m3.conditional().beta_lstm.size(), 3u);
  EXPECT_EQ(m3.conditional().beta_lstm[2].W_i.rows(), 8);
  EXPECT_EQ(m3.conditional().beta_head.W.rows(), 2);
}

TEST(Model, BuildIsDeterministicAndParameterNamesUnique) {
  const auto s = ModelSpec::make(Family::Conditional, LayerKind::AfLstm, Depth::CA2, 4, 5);
  auto a = Model::build(s, 11), b = Model::build(s, 11), c = Model::build(s, 12);
  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    EXPECT_EQ(*pa[k].value, *pb[k].value) << pa[k].name;
    any_diff = any_diff || *pa[k].value != *pc[k].value;
    names.push_back(pa[k].name);
  }
  EXPECT_TRUE(any_diff);
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}

TEST(Model, BatchLayoutAndZeroPadding) {
  const auto data = test::tiny_dataset(3, 2, 40, 1);
  auto s = ModelSpec::make(Family::Conditional, LayerKind::Lstm, Depth::CA0, 3, 2);
  s.seq_len = 3;
  const std::vector<std::size_t> rows{1, 10};
  const auto b = make_batch(data, rows, s);
  ASSERT_EQ(b.z.size(), 3u);
  EXPECT_EQ(b.y.rows(), 2);
  EXPECT_EQ(b.z[0].rows(), 6);
  // row 1, oldest step is row -1: padded
  for (int c = 0; c < 2; ++c) EXPECT_EQ(b.z[0](0, c), 0.0);
  EXPECT_EQ(b.z[1](2, 1), data.x1(0, 2, 1));
  EXPECT_EQ(b.z[2](2, 1), data.x1(1, 2, 1));
  EXPECT_EQ(b.z[0](3 + 1, 0), data.x1(8, 1, 0));
  EXPECT_EQ(b.y(1, 2), data.y(10, 2));

  s.hurst_as_characteristic = true;
  EXPECT_THROW(make_batch(data, rows, s), ConfigError);
  s.n_chars = 3;
  const auto bh = make_batch(data, rows, s);
  EXPECT_EQ(bh.z[2](5, 2), data.x2(10, 2, 0));
}

TEST(Model, CombineFactorsMatchesLoop) {
  Graph_ g;
  const MatrixXd beta = test::random_matrix(6, 2, 1), f = test::random_matrix(2, 2, 2);
  const MatrixXd out = combine_factors(g.constant(beta), g.constant(f), 3).value();
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k) s += beta(b * 3 + i, k) * f(b, k);
      EXPECT_NEAR(out(b, i), s, 1e-15);
    }
  EXPECT_THROW(combine_factors(g.constant(beta), g.constant(f), 4), ConfigError);
}

TEST(Model, LinearConditionalForwardMatchesHandComputation) {
  const auto data = test::tiny_dataset(3, 2, 40, 2);
  const auto s = ModelSpec::make(Family::Conditional, LayerKind::Linear, Depth::CA0, 3, 2);
  const auto m = Model::build(s, 3);
  const auto rows = iota_rows(5, 9);
  const MatrixXd got = m.predict(data, rows);
  const auto& bl = m.conditional().beta_linear[0];
  const auto& fn = m.conditional().factor_net[0];
  for (std::size_t b = 0; b < rows.size(); ++b) {
    double f = fn.b(0, 0);
    for (int i = 0; i < 3; ++i) f += fn.W(0, i) * data.y(rows[b], i);
    for (int i = 0; i < 3; ++i) {
      double beta = bl.b(0, 0);
      for (int c = 0; c < 2; ++c) beta += bl.W(0, c) * data.x1(rows[b], i, c);
      EXPECT_NEAR(got(static_cast<Eigen::Index>(b), i), beta * f, 1e-14);
    }
  }
}

TEST(Model, SimpleAutoencoderForward) {
  const auto data = test::tiny_dataset(4, 2, 40, 3);
  auto s = ModelSpec::make(Family::Simple, LayerKind::Linear, Depth::CA0, 4, 2, 2);
  s.batch_norm = false;
  const auto m = Model::build(s, 1);
  const auto rows = iota_rows(0, 5);
  const auto batch = make_batch(data, rows, s);
  const auto& e = m.simple().encoder;
  const auto& d = m.simple().decoder;
  const MatrixXd code = (batch.y * e.W.transpose()).rowwise() + e.b.row(0);
  const MatrixXd expect = (code * d.W.transpose()).rowwise() + d.b.row(0);
  EXPECT_LT((m.predict(batch) - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Model, BatchNormNeedsTrainStepBeforeEval) {
  const auto data = test::tiny_dataset(4, 2, 40, 3);
  const auto s = ModelSpec::make(Family::Simple, LayerKind::Linear, Depth::CA0, 4, 2, 2);
  auto m = Model::build(s, 1);
  const auto rows = iota_rows(0, 8);
  const auto batch = make_batch(data, rows, s);
  EXPECT_THROW(m.predict(batch), StateError);
  Graph_ g;
  m.forward(g, batch, NormMode::Train);
  EXPECT_NO_THROW(m.predict(batch));
}

TEST(Model, GradientsOfFullModels) {
  const auto data = test::tiny_dataset(2, 3, 40, 4);
  std::vector<ModelSpec> specs{ModelSpec::make(Family::Simple, LayerKind::Linear, Depth::CA0, 2, 3)};
  for (auto kind : {LayerKind::Linear, LayerKind::Lstm, LayerKind::AfLstm}) {
    auto s = ModelSpec::make(Family::Conditional, kind, Depth::CA1, 2, 3);
    s.seq_len = 3;
    specs.push_back(s);
  }
  const auto rows = iota_rows(3, 5);
  for (const auto& s : specs) {
    auto m = Model::build(s, 9);
    const auto batch = make_batch(data, rows, s);
    auto ptrs = test::param_pointers(m.parameters());
    auto fn = [&](Graph_& g) {
      auto y_hat = m.forward(g, batch, NormMode::Train);
      return mean(square(y_hat - g.constant(batch.y)));
    };
    EXPECT_LT(grad_check<double>(fn, ptrs, 1e-6), 1e-4) << to_string(s.family) << " " << to_string(s.layer_kind);
  }
}

TEST(Model, ChunkedPredictionEqualsSingleBatch) {
  const auto data = test::tiny_dataset(3, 2, 600, 5);
  const auto s = ModelSpec::make(Family::Conditional, LayerKind::Lstm, Depth::CA0, 3, 2);
  const auto m = Model::build(s, 2);
  const auto rows = iota_rows(0, 600);
  const MatrixXd whole = m.predict(make_batch(data, rows, s));
  EXPECT_EQ(m.predict(data, rows), whole);
}

TEST(Ensemble, SingleMemberAndSeedOrder) {
  const auto data = test::tiny_dataset(3, 2, 40, 6);
  const auto s = ModelSpec::make(Family::Conditional, LayerKind::Linear, Depth::CA1, 3, 2);
  const auto rows = iota_rows(0, 40);
  EnsembleModel one{s, {4}, {Model::build(s, 4)}};
  EXPECT_EQ(one.predict(data, rows), one.members[0].predict(data, rows));

  EnsembleModel many{s, {}, {}};
  for (std::uint64_t k = 0; k < 5; ++k) {
    many.seeds.push_back(k);
    many.members.push_back(Model::build(s, k));
  }
  EnsembleModel shuffled = many;
  std::reverse(shuffled.seeds.begin(), shuffled.seeds.end());
  std::reverse(shuffled.members.begin(), shuffled.members.end());
  EXPECT_EQ(many.predict(data, rows), shuffled.predict(data, rows));

  MatrixXd mean = MatrixXd::Zero(40, 3);
  for (const auto& m : many.members) mean += m.predict(data, rows);
  EXPECT_LT((mean / 5.0 - many.predict(data, rows)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Serialize, RoundTripIsByteStable) {
  const auto data = test::tiny_dataset(3, 2, 40, 7);
  for (auto family : {Family::Simple, Family::Conditional}) {
    auto kind = family == Family::Simple ? LayerKind::Linear : LayerKind::AfLstm;
    auto depth = family == Family::Simple ? Depth::CA0 : Depth::CA1;
    const auto s = ModelSpec::make(family, kind, depth, 3, 2);
    EnsembleModel e{s, {3, 4}, {Model::build(s, 3), Model::build(s, 4)}};
    if (family == Family::Simple) {
      for (auto& m : e.members) {
        Graph_ g;
        m.forward(g, make_batch(data, iota_rows(0, 10), s), NormMode::Train);
      }
    }
    const auto text = to_json(e);
    const auto back = ensemble_from_json(text);
    EXPECT_EQ(to_json(back), text);
    EXPECT_EQ(back.spec, s);
    const auto rows = iota_rows(0, 40);
    EXPECT_EQ(back.predict(data, rows), e.predict(data, rows));
  }
}

TEST(Serialize, RejectsMalformedDocuments) {
  const auto s = ModelSpec::make(Family::Conditional, LayerKind::Linear, Depth::CA0, 3, 2);
  EnsembleModel e{s, {0}, {Model::build(s, 0)}};
  auto text = to_json(e);
  EXPECT_THROW(ensemble_from_json("{not json"), ParseError);
  auto pos = text.find("m0/beta.0.W");
  ASSERT_NE(pos, std::string::npos);
  auto broken = text;
  broken.replace(pos, 11, "m0/beta.9.W");
  EXPECT_THROW(ensemble_from_json(broken), ParseError);
}
