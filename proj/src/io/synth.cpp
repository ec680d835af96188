#include "afca/io/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "afca/errors.hpp"
#include "afca/features/normalize.hpp"
#include "afca/numcore/rng.hpp"

namespace afca {

void SynthConfig::validate() const {
  if (n_assets < 1 || n_chars < 1 || K < 1) throw ConfigError("synth dimensions must be >= 1");
  if (T < 20) throw ConfigError("synth T must be >= 20");
  if (!(anomaly_magnitude > 0.0)) throw ConfigError("anomaly_magnitude must be > 0");
  if (anomaly_count < 0 || anomaly_count >= T) throw ConfigError("anomaly_count must lie in [0, T)");
  if (beta_scale < 0.0 || noise_scale < 0.0 || factor_scale < 0.0) throw ConfigError("synth scales must be >= 0");
  if (!(price_scale > 0.0)) throw ConfigError("price_scale must be > 0");
  if (start_ts % kHourSeconds != 0) throw ConfigError("start_ts must fall on an hour boundary");
}

SynthResult generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto T = static_cast<std::size_t>(cfg.T), N = static_cast<std::size_t>(cfg.n_assets),
             C = static_cast<std::size_t>(cfg.n_chars), K = static_cast<std::size_t>(cfg.K);
  auto z_rng = SplitMix64::stream(cfg.seed, 1);
  auto gamma_rng = SplitMix64::stream(cfg.seed, 2);
  auto factor_rng = SplitMix64::stream(cfg.seed, 3);
  auto noise_rng = SplitMix64::stream(cfg.seed, 4);
  auto spike_rng = SplitMix64::stream(cfg.seed, 5);
  auto bar_rng = SplitMix64::stream(cfg.seed, 6);

  SynthResult out;
  auto& d = out.dataset;
  for (std::size_t i = 0; i < N; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "SYN%02zu", i);
    d.assets.emplace_back(name);
  }
  for (std::size_t r = 0; r < T; ++r) d.timestamps.push_back(cfg.start_ts + static_cast<std::int64_t>(r + 1) * kHourSeconds);
  d.bounds = split(T);
  d.x1 = Tensor<double>::zeros({T, N, C});
  d.x2 = Tensor<double>::zeros({T, N, 1});
  d.y = Tensor<double>::zeros({T, N});
  d.log_returns = Tensor<double>::zeros({T, N});
  d.x1_scaler.assign(C, ScalerStats{});
  d.y_scaler.assign(1, ScalerStats{});

  std::vector<double> gamma(C * K);
  for (auto& g : gamma) g = cfg.beta_scale * gamma_rng.normal();

  std::vector<double> cross(N);
  for (std::size_t r = 0; r < T; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      for (auto& v : cross) v = z_rng.normal();
      const auto ranked = rank_normalize(cross);
      for (std::size_t i = 0; i < N; ++i) d.x1(r, i, c) = ranked[i];
    }
    std::vector<double> f(K);
    for (auto& v : f) v = cfg.factor_scale * factor_rng.normal();
    for (std::size_t i = 0; i < N; ++i) {
      double y = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double beta = cfg.beta_intercept;
        for (std::size_t c = 0; c < C; ++c) beta += d.x1(r, i, c) * gamma[c * K + k];
        y += beta * f[k];
      }
      d.y(r, i) = y + cfg.noise_scale * noise_rng.normal();
      d.x2(r, i, 0) = 0.5;
    }
  }

  const auto count = static_cast<std::size_t>(cfg.anomaly_count);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t s = 0; s < count; ++s) {
      const auto lo = s * T / count, hi = (s + 1) * T / count;
      const auto r = lo + static_cast<std::size_t>(spike_rng.below(hi - lo));
      const double sign = spike_rng.uniform() < 0.5 ? -1.0 : 1.0;
      d.y(r, i) += sign * cfg.anomaly_magnitude * cfg.noise_scale;
      out.truth.push_back({d.assets[i], d.timestamps[r]});
    }
  }
  for (std::size_t r = 0; r < T; ++r)
    for (std::size_t i = 0; i < N; ++i) d.log_returns(r, i) = cfg.price_scale * d.y(r, i);
  d.validate();

  auto& p = out.panel;
  p.assets = d.assets;
  for (std::size_t t = 0; t <= T; ++t) p.timestamps.push_back(cfg.start_ts + static_cast<std::int64_t>(t) * kHourSeconds);
  for (std::size_t i = 0; i < N; ++i) {
    OhlcvSeries s;
    double close = 100.0;
    for (std::size_t t = 0; t <= T; ++t) {
      const double open = close;
      if (t > 0) close = open * std::exp(d.log_returns(t - 1, i));
      const double up = std::abs(bar_rng.normal()) * 0.5 * cfg.price_scale;
      const double down = std::abs(bar_rng.normal()) * 0.5 * cfg.price_scale;
      s.open.push_back(open);
      s.close.push_back(close);
      s.high.push_back(std::max(open, close) * std::exp(up));
      s.low.push_back(std::min(open, close) * std::exp(-down));
      s.volume.push_back(1000.0 * std::exp(0.25 * bar_rng.normal()));
    }
    p.series.push_back(std::move(s));
  }
  p.validate();
  return out;
}

}  // namespace afca
