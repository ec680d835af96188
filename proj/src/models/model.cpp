#include "afca/models/model.hpp"

#include <algorithm>
#include <numeric>

namespace afca {

std::string to_string(Family f) { return f == Family::Simple ? "simple" : "conditional"; }

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Linear: return "linear";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::AfLstm: return "aflstm";
  }
  return "?";
}

std::string to_string(Depth d) { return "ca" + std::to_string(static_cast<int>(d)); }

Family family_from_string(const std::string& s) {
  if (s == "simple") return Family::Simple;
  if (s == "conditional") return Family::Conditional;
  throw ConfigError("unknown model family '" + s + "' (expected simple|conditional)");
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "simple" || s == "linear") return LayerKind::Linear;
  if (s == "lstm") return LayerKind::Lstm;
  if (s == "aflstm") return LayerKind::AfLstm;
  throw ConfigError("unknown layer kind '" + s + "' (expected simple|lstm|aflstm)");
}

Depth depth_from_string(const std::string& s) {
  if (s == "ca0") return Depth::CA0;
  if (s == "ca1") return Depth::CA1;
  if (s == "ca2") return Depth::CA2;
  if (s == "ca3") return Depth::CA3;
  throw ConfigError("unknown depth '" + s + "' (expected ca0..ca3)");
}

std::vector<int> beta_hidden_for(Depth d) {
  switch (d) {
    case Depth::CA0: return {};
    case Depth::CA1: return {32};
    case Depth::CA2: return {32, 16};
    case Depth::CA3: return {32, 16, 8};
  }
  return {};
}

ModelSpec ModelSpec::make(Family family, LayerKind kind, Depth depth, int n_assets, int n_chars, int n_factors) {
  ModelSpec s;
  s.family = family;
  s.layer_kind = kind;
  s.depth = depth;
  s.n_assets = n_assets;
  s.n_chars = n_chars;
  s.n_factors = n_factors;
  s.beta_hidden = family == Family::Conditional ? beta_hidden_for(depth) : std::vector<int>{};
  s.batch_norm = family == Family::Simple;
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  if (n_assets < 1) throw ConfigError("n_assets must be >= 1");
  if (n_factors < 1) throw ConfigError("n_factors must be >= 1");
  if (family == Family::Simple) {
    if (layer_kind != LayerKind::Linear) throw ConfigError("the simple autoencoder is linear-only");
    if (depth != Depth::CA0) throw ConfigError("depth tags apply to the conditional family only");
    return;
  }
  if (n_chars < 1) throw ConfigError("n_chars must be >= 1");
  if (beta_hidden != beta_hidden_for(depth)) {
    throw ConfigError("beta_hidden does not match depth " + to_string(depth));
  }
  for (int w : factor_hidden)
    if (w < 1) throw ConfigError("factor_hidden widths must be >= 1");
  if (layer_kind != LayerKind::Linear && seq_len < 1) throw ConfigError("seq_len must be >= 1");
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> rows, const ModelSpec& spec) {
  const auto N = data.n_assets();
  if (static_cast<int>(N) != spec.n_assets) {
    throw ConfigError("model expects " + std::to_string(spec.n_assets) + " assets, dataset has " +
                      std::to_string(N));
  }
  const auto B = rows.size();
  Batch batch;
  batch.rows.assign(rows.begin(), rows.end());
  batch.y.resize(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(N));
  for (std::size_t b = 0; b < B; ++b) {
    if (rows[b] >= data.rows()) throw DataError("batch row " + std::to_string(rows[b]) + " out of range");
    for (std::size_t i = 0; i < N; ++i) batch.y(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) = data.y(rows[b], i);
  }
  if (spec.family == Family::Simple) return batch;

  const auto C = data.n_chars();
  const auto C_eff = C + (spec.hurst_as_characteristic ? 1 : 0);
  if (static_cast<int>(C_eff) != spec.n_chars) {
    throw ConfigError("model expects " + std::to_string(spec.n_chars) + " characteristics, dataset provides " +
                      std::to_string(C_eff));
  }
  const int L = spec.window();
  for (int s = 0; s < L; ++s) {
    MatrixXd z = MatrixXd::Zero(static_cast<Eigen::Index>(B * N), static_cast<Eigen::Index>(C_eff));
    for (std::size_t b = 0; b < B; ++b) {
      const auto r = static_cast<long long>(rows[b]) - (L - 1) + s;
      if (r < 0) continue;
      const auto ru = static_cast<std::size_t>(r);
      for (std::size_t i = 0; i < N; ++i) {
        const auto zr = static_cast<Eigen::Index>(b * N + i);
        for (std::size_t c = 0; c < C; ++c) z(zr, static_cast<Eigen::Index>(c)) = data.x1(ru, i, c);
        if (spec.hurst_as_characteristic) z(zr, static_cast<Eigen::Index>(C)) = data.x2(ru, i, 0);
      }
    }
    batch.z.push_back(std::move(z));
  }
  return batch;
}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  SplitMix64 rng = SplitMix64::stream(seed, 0x6d6f64656cULL);
  const Eigen::Index N = spec.n_assets, K = spec.n_factors;
  if (spec.family == Family::Simple) {
    m.simple_.encoder = LinearParams<Real>::init(N, K, rng);
    m.simple_.decoder = LinearParams<Real>::init(K, N, rng);
    m.simple_.bn = NormParams<Real>::init(K);
    return m;
  }
  auto& c = m.cond_;
  const Eigen::Index C = spec.n_chars;
  switch (spec.layer_kind) {
    case LayerKind::Linear: {
      Eigen::Index in = C;
      for (int h : spec.beta_hidden) {
        c.beta_linear.push_back(LinearParams<Real>::init(in, h, rng));
        in = h;
      }
      c.beta_linear.push_back(LinearParams<Real>::init(in, K, rng));
      break;
    }
    case LayerKind::Lstm: {
      const auto widths = spec.beta_hidden.empty() ? std::vector<int>{spec.n_chars} : spec.beta_hidden;
      Eigen::Index in = C;
      for (int h : widths) {
        c.beta_lstm.push_back(LstmParams<Real>::init(in, h, rng));
        in = h;
      }
      c.beta_head = LinearParams<Real>::init(in, K, rng);
      break;
    }
    case LayerKind::AfLstm: {
      const auto widths = spec.beta_hidden.empty() ? std::vector<int>{spec.n_chars} : spec.beta_hidden;
      Eigen::Index in = C;
      for (std::size_t l = 0; l < widths.size(); ++l) {
        const Eigen::Index out = l + 1 == widths.size() ? K : widths[l];
        c.beta_aflstm.push_back(AfLstmLayerParams<Real>::init(in, widths[l], out, spec.seq_len, rng));
        in = out;
      }
      break;
    }
  }
  Eigen::Index in = N;
  for (int h : spec.factor_hidden) {
    c.factor_net.push_back(LinearParams<Real>::init(in, h, rng));
    in = h;
  }
  c.factor_net.push_back(LinearParams<Real>::init(in, K, rng));
  c.bn = NormParams<Real>::init(K);
  return m;
}

Var_ Model::simple_forward(Graph_& g, Var_ y, NormMode mode, BatchNormState<Real>& bn_state) const {
  auto code = linear_forward(g, simple_.encoder, y);
  if (spec_.batch_norm) code = batch_norm(code, g.parameter(simple_.bn.psi), g.parameter(simple_.bn.phi), bn_state, mode);
  return linear_forward(g, simple_.decoder, code);
}

Var_ Model::beta(Graph_& g, const Batch& batch) const {
  if (spec_.family != Family::Conditional) throw ConfigError("beta network exists only in the conditional family");
  if (batch.z.size() != static_cast<std::size_t>(spec_.window())) {
    throw ShapeError("batch carries " + std::to_string(batch.z.size()) + " window steps, model expects " +
                     std::to_string(spec_.window()));
  }
  const auto& c = cond_;
  switch (spec_.layer_kind) {
    case LayerKind::Linear: {
      auto z = g.constant(batch.z.back());
      for (std::size_t l = 0; l + 1 < c.beta_linear.size(); ++l) z = relu(linear_forward(g, c.beta_linear[l], z));
      return linear_forward(g, c.beta_linear.back(), z);
    }
    case LayerKind::Lstm: {
      Sequence<Real> seq;
      for (const auto& step : batch.z) seq.push_back(g.constant(step));
      for (const auto& cell : c.beta_lstm) seq = lstm_sequence(g, cell, seq);
      return linear_forward(g, c.beta_head, seq.back());
    }
    case LayerKind::AfLstm: {
      Sequence<Real> seq;
      for (const auto& step : batch.z) seq.push_back(g.constant(step));
      for (const auto& layer : c.beta_aflstm) seq = af_lstm_layer(g, layer, seq).outputs;
      return seq.back();
    }
  }
  throw ConfigError("unhandled layer kind");
}

Var_ Model::factor(Graph_& g, Var_ y) const {
  const auto& net = cond_.factor_net;
  for (std::size_t l = 0; l + 1 < net.size(); ++l) y = relu(linear_forward(g, net[l], y));
  return linear_forward(g, net.back(), y);
}

Var_ combine_factors(Var_ beta, Var_ factors, Eigen::Index n_assets) {
  if (beta.cols() != factors.cols() || beta.rows() != factors.rows() * n_assets) {
    throw ConfigError("beta " + shape_str(beta.value()) + " and factors " + shape_str(factors.value()) +
                      " disagree on K or batch size");
  }
  auto loadings = sum(hadamard(beta, repeat_rows(factors, n_assets)), 1);
  return reshape(loadings, factors.rows(), n_assets);
}

Var_ Model::forward_impl(Graph_& g, const Batch& batch, NormMode mode, BatchNormState<Real>& bn_state) const {
  if (batch.y.cols() != spec_.n_assets) {
    throw ShapeError("batch returns " + shape_str(batch.y) + " but model expects " +
                     std::to_string(spec_.n_assets) + " assets");
  }
  auto y = g.constant(batch.y);
  if (spec_.family == Family::Simple) return simple_forward(g, y, mode, bn_state);
  auto b = beta(g, batch);
  auto x = factor(g, y);
  if (spec_.batch_norm) x = batch_norm(x, g.parameter(cond_.bn.psi), g.parameter(cond_.bn.phi), bn_state, mode);
  return combine_factors(b, x, spec_.n_assets);
}

Var_ Model::forward(Graph_& g, const Batch& batch, NormMode mode) {
  auto& state = spec_.family == Family::Simple ? simple_.bn_state : cond_.bn_state;
  return forward_impl(g, batch, mode, state);
}

Var_ Model::forward(Graph_& g, const Batch& batch) const {
  auto state = spec_.family == Family::Simple ? simple_.bn_state : cond_.bn_state;
  return forward_impl(g, batch, NormMode::Eval, state);
}

MatrixXd Model::predict(const Batch& batch) const {
  Graph_ g;
  return forward(g, batch).value();
}

MatrixXd Model::predict(const Dataset& data, std::span<const std::size_t> rows) const {
  constexpr std::size_t kChunk = 256;
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), spec_.n_assets);
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const auto n = std::min(kChunk, rows.size() - start);
    const auto batch = make_batch(data, rows.subspan(start, n), spec_);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = predict(batch);
  }
  return out;
}

ParamList<Real> Model::parameters() {
  ParamList<Real> list;
  if (spec_.family == Family::Simple) {
    simple_.encoder.collect(list, "encoder");
    simple_.decoder.collect(list, "decoder");
    if (spec_.batch_norm) simple_.bn.collect(list, "bn");
    return list;
  }
  auto& c = cond_;
  for (std::size_t l = 0; l < c.beta_linear.size(); ++l) c.beta_linear[l].collect(list, "beta." + std::to_string(l));
  for (std::size_t l = 0; l < c.beta_lstm.size(); ++l) c.beta_lstm[l].collect(list, "beta_lstm." + std::to_string(l));
  if (spec_.layer_kind == LayerKind::Lstm) c.beta_head.collect(list, "beta_head");
  for (std::size_t l = 0; l < c.beta_aflstm.size(); ++l) c.beta_aflstm[l].collect(list, "beta_aflstm." + std::to_string(l));
  for (std::size_t l = 0; l < c.factor_net.size(); ++l) c.factor_net[l].collect(list, "factor." + std::to_string(l));
  if (spec_.batch_norm) c.bn.collect(list, "bn");
  return list;
}

std::vector<const MatrixXd*> Model::weights() const {
  // collect() hands out mutable pointers; they are only read here.
  auto list = const_cast<Model*>(this)->parameters();
  std::vector<const MatrixXd*> out;
  for (const auto& p : list)
    if (p.role == ParamRole::Weight) out.push_back(p.value);
  return out;
}

MatrixXd residual(const Model& model, const Dataset& data, std::span<const std::size_t> rows) {
  MatrixXd y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.n_assets()));
  for (std::size_t b = 0; b < rows.size(); ++b)
    for (std::size_t i = 0; i < data.n_assets(); ++i) y(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) = data.y(rows[b], i);
  return y - model.predict(data, rows);
}

MatrixXd EnsembleModel::predict(const Dataset& data, std::span<const std::size_t> rows) const {
  if (members.empty()) throw StateError("ensemble has no members");
  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return seeds[a] < seeds[b]; });
  MatrixXd acc = members[order.front()].predict(data, rows);
  for (std::size_t k = 1; k < order.size(); ++k) acc += members[order[k]].predict(data, rows);
  if (members.size() > 1) acc /= static_cast<double>(members.size());
  return acc;
}

MatrixXd EnsembleModel::residual(const Dataset& data, std::span<const std::size_t> rows) const {
  MatrixXd y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.n_assets()));
  for (std::size_t b = 0; b < rows.size(); ++b)
    for (std::size_t i = 0; i < data.n_assets(); ++i) y(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) = data.y(rows[b], i);
  return y - predict(data, rows);
}

}  // namespace afca
