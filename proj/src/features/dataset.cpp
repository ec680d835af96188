#include "afca/features/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "afca/errors.hpp"
#include "afca/features/hurst.hpp"
#include "afca/features/indicators.hpp"

namespace afca {

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val" || s == "validation") return Split::Validation;
  if (s == "test") return Split::Test;
  throw ConfigError("unknown split '" + s + "' (expected train|val|test)");
}

SplitBounds split(std::size_t usable_rows) {
  if (usable_rows < 20) throw DataError("need at least 20 usable rows to split, got " + std::to_string(usable_rows));
  const auto train = usable_rows * 70 / 100;
  const auto val = usable_rows * 15 / 100;
  return {train, train + val};
}

std::vector<std::size_t> Dataset::rows_of(Split s) const {
  std::size_t lo = 0, hi = bounds.train_end;
  if (s == Split::Validation) lo = bounds.train_end, hi = bounds.val_end;
  if (s == Split::Test) lo = bounds.val_end, hi = rows();
  std::vector<std::size_t> out;
  for (auto t = lo; t < hi; ++t) out.push_back(t);
  return out;
}

void Dataset::validate() const {
  const auto T = rows(), N = n_assets();
  auto expect = [](const char* name, const Tensor<double>& t, std::vector<std::size_t> shape) {
    if (t.shape() != shape) {
      throw DataError(std::string(name) + " has shape " + shape_str(std::span<const std::size_t>(t.shape())) +
                      ", expected " + shape_str(std::span<const std::size_t>(shape)));
    }
  };
  if (N == 0) throw DataError("dataset has no assets");
  if (x1.rank() != 3) throw DataError("X1 must be rank 3");
  expect("X1", x1, {T, N, x1.dim(2)});
  expect("X2", x2, {T, N, 1});
  expect("Y", y, {T, N});
  expect("log_returns", log_returns, {T, N});
  if (!(bounds.train_end > 0 && bounds.train_end < bounds.val_end && bounds.val_end < T)) {
    throw DataError("split bounds (" + std::to_string(bounds.train_end) + ", " + std::to_string(bounds.val_end) +
                    ") invalid for " + std::to_string(T) + " rows");
  }
  for (std::size_t t = 1; t < T; ++t)
    if (timestamps[t] <= timestamps[t - 1]) throw AlignmentError("dataset timestamps not increasing at row " + std::to_string(t));
}

void OhlcvPanel::validate() const {
  if (series.size() != assets.size()) throw DataError("panel has " + std::to_string(assets.size()) + " assets but " +
                                                      std::to_string(series.size()) + " series");
  std::string gaps;
  std::size_t missing = 0;
  for (std::size_t t = 1; t < timestamps.size(); ++t) {
    const auto step = timestamps[t] - timestamps[t - 1];
    if (step <= 0 || step % kHourSeconds != 0) {
      throw AlignmentError("timestamps off the hourly grid between " + std::to_string(timestamps[t - 1]) + " and " +
                           std::to_string(timestamps[t]));
    }
    for (auto ts = timestamps[t - 1] + kHourSeconds; ts < timestamps[t]; ts += kHourSeconds) {
      if (missing < 10) gaps += (missing ? ", " : "") + std::to_string(ts);
      ++missing;
    }
  }
  if (missing) {
    throw AlignmentError("hourly grid has " + std::to_string(missing) + " missing timestamps: " + gaps +
                         (missing > 10 ? ", ..." : ""));
  }
  for (std::size_t a = 0; a < series.size(); ++a) {
    const auto& s = series[a];
    const auto n = timestamps.size();
    if (s.open.size() != n || s.high.size() != n || s.low.size() != n || s.close.size() != n || s.volume.size() != n) {
      throw AlignmentError("series for " + assets[a] + " does not share the panel timestamp index");
    }
    for (std::size_t t = 0; t < n; ++t) {
      const auto where = [&] { return assets[a] + " at " + std::to_string(timestamps[t]); };
      if (!(std::isfinite(s.open[t]) && std::isfinite(s.high[t]) && std::isfinite(s.low[t]) &&
            std::isfinite(s.close[t]) && std::isfinite(s.volume[t]))) {
        throw DataError("non-finite bar for " + where());
      }
      if (s.volume[t] < 0.0) throw DataError("negative volume for " + where());
      if (s.high[t] < std::max(s.open[t], s.close[t])) throw DataError("high below open/close for " + where());
      if (s.low[t] > std::min(s.open[t], s.close[t])) throw DataError("low above open/close for " + where());
    }
  }
}

Dataset assemble(const OhlcvPanel& panel, const FeatureConfig& config) {
  panel.validate();
  const auto P = panel.size();
  const auto N = panel.assets.size();
  constexpr std::size_t C = 5;
  if (N == 0) throw DataError("panel has no assets");
  if (P < 2) throw DataError("panel needs at least two bars");

  // Per asset, per bar: indicator values and Hurst of the returns ending at that bar.
  std::vector<std::array<std::vector<double>, C>> ind(N);
  std::vector<std::vector<double>> returns(N), hurst(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& s = panel.series[i];
    ind[i] = {sma(s.close, config.sma_window), dema(s.close, config.dema_window),
              cci(s.high, s.low, s.close, config.cci_window), ad(s.high, s.low, s.close, s.volume),
              atr(s.high, s.low, s.close, config.atr_window)};
    returns[i] = log_returns(s.close);  // returns[i][t-1] is realized at bar t
    const auto h = rolling_hurst(returns[i], config.hurst_window);
    hurst[i].assign(P, kMasked);
    for (std::size_t t = 1; t < P; ++t) hurst[i][t] = h[t - 1];
  }

  // Row for bar t pairs the return at t with features of bar t-1.
  auto usable = [&](std::size_t t) {
    for (std::size_t i = 0; i < N; ++i) {
      if (is_masked(hurst[i][t - 1])) return false;
      for (std::size_t c = 0; c < C; ++c)
        if (is_masked(ind[i][c][t - 1])) return false;
    }
    return true;
  };
  std::size_t first = 1;
  while (first < P && !usable(first)) ++first;
  if (first >= P) throw DataError("panel of " + std::to_string(P) + " bars is shorter than the feature warm-up");
  const auto T = P - first;

  Dataset d;
  d.assets = panel.assets;
  d.timestamps.assign(panel.timestamps.begin() + static_cast<std::ptrdiff_t>(first), panel.timestamps.end());
  d.bounds = split(T);
  d.x1 = Tensor<double>::zeros({T, N, C});
  d.x2 = Tensor<double>::zeros({T, N, 1});
  d.y = Tensor<double>::zeros({T, N});
  d.log_returns = Tensor<double>::zeros({T, N});

  std::vector<double> cross(N);
  for (std::size_t r = 0; r < T; ++r) {
    const auto t = first + r;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t i = 0; i < N; ++i) cross[i] = ind[i][c][t - 1];
      const auto ranked = rank_normalize(cross);
      for (std::size_t i = 0; i < N; ++i) d.x1(r, i, c) = ranked[i];
    }
    for (std::size_t i = 0; i < N; ++i) {
      cross[i] = returns[i][t - 1];
      d.log_returns(r, i) = cross[i];
      d.x2(r, i, 0) = hurst[i][t - 1];
    }
    const auto ranked = rank_normalize(cross);
    for (std::size_t i = 0; i < N; ++i) d.y(r, i) = ranked[i];
  }

  std::vector<std::vector<double>> x1_train(C), y_train(1);
  for (std::size_t r = 0; r < d.bounds.train_end; ++r)
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t c = 0; c < C; ++c) x1_train[c].push_back(d.x1(r, i, c));
      y_train[0].push_back(d.y(r, i));
    }
  StandardScaler x1_scaler, y_scaler;
  x1_scaler.fit(x1_train);
  y_scaler.fit(y_train);
  for (std::size_t r = 0; r < T; ++r)
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t c = 0; c < C; ++c) d.x1(r, i, c) = x1_scaler.transform(c, d.x1(r, i, c));
      d.y(r, i) = y_scaler.transform(0, d.y(r, i));
    }
  d.x1_scaler = x1_scaler.stats();
  d.y_scaler = y_scaler.stats();
  d.validate();
  return d;
}

}  // namespace afca
