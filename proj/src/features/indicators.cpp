#include "afca/features/indicators.hpp"

#include <algorithm>
#include <string>

#include "afca/errors.hpp"

namespace afca {

namespace {

void require_window(std::size_t window) {
  if (window < 1) throw ConfigError("indicator window must be >= 1");
}

void require_aligned(std::size_t n, std::initializer_list<std::size_t> others) {
  for (auto m : others)
    if (m != n) throw DataError("indicator inputs differ in length (" + std::to_string(n) + " vs " + std::to_string(m) + ")");
}

}  // namespace

std::vector<double> log_returns(std::span<const double> close) {
  if (close.size() < 2) throw DataError("log returns need at least two closes");
  for (std::size_t t = 0; t < close.size(); ++t) {
    if (!(close[t] > 0.0)) throw DataError("nonpositive close at index " + std::to_string(t));
  }
  std::vector<double> r(close.size() - 1);
  for (std::size_t t = 1; t < close.size(); ++t) r[t - 1] = std::log(close[t] / close[t - 1]);
  return r;
}

std::vector<double> sma(std::span<const double> x, std::size_t window) {
  require_window(window);
  std::vector<double> out(x.size(), kMasked);
  for (std::size_t t = window - 1; t < x.size(); ++t) {
    double s = 0.0;
    for (std::size_t j = t + 1 - window; j <= t; ++j) s += x[j];
    out[t] = s / static_cast<double>(window);
  }
  return out;
}

std::vector<double> ema(std::span<const double> x, std::size_t window) {
  require_window(window);
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  const double alpha = 2.0 / (static_cast<double>(window) + 1.0);
  out[0] = x[0];
  for (std::size_t t = 1; t < x.size(); ++t) out[t] = alpha * x[t] + (1.0 - alpha) * out[t - 1];
  return out;
}

std::vector<double> dema(std::span<const double> x, std::size_t window) {
  const auto e1 = ema(x, window);
  const auto e2 = ema(e1, window);
  std::vector<double> out(x.size(), kMasked);
  for (std::size_t t = window - 1; t < x.size(); ++t) out[t] = 2.0 * e1[t] - e2[t];
  return out;
}

std::vector<double> cci(std::span<const double> high, std::span<const double> low, std::span<const double> close,
                        std::size_t window) {
  require_window(window);
  require_aligned(close.size(), {high.size(), low.size()});
  std::vector<double> tp(close.size());
  for (std::size_t t = 0; t < tp.size(); ++t) tp[t] = (high[t] + low[t] + close[t]) / 3.0;
  std::vector<double> out(tp.size(), kMasked);
  const auto w = static_cast<double>(window);
  for (std::size_t t = window - 1; t < tp.size(); ++t) {
    double s = 0.0;
    for (std::size_t j = t + 1 - window; j <= t; ++j) s += tp[j];
    const double mean = s / w;
    double dev = 0.0;
    for (std::size_t j = t + 1 - window; j <= t; ++j) dev += std::abs(tp[j] - mean);
    const double md = dev / w;
    out[t] = md == 0.0 ? 0.0 : (tp[t] - mean) / (0.015 * md);
  }
  return out;
}

std::vector<double> ad(std::span<const double> high, std::span<const double> low, std::span<const double> close,
                       std::span<const double> volume) {
  require_aligned(close.size(), {high.size(), low.size(), volume.size()});
  std::vector<double> out(close.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < close.size(); ++t) {
    const double range = high[t] - low[t];
    const double mfm = range == 0.0 ? 0.0 : ((close[t] - low[t]) - (high[t] - close[t])) / range;
    acc += mfm * volume[t];
    out[t] = acc;
  }
  return out;
}

std::vector<double> true_range(std::span<const double> high, std::span<const double> low,
                               std::span<const double> close) {
  require_aligned(close.size(), {high.size(), low.size()});
  std::vector<double> tr(close.size());
  for (std::size_t t = 0; t < close.size(); ++t) {
    tr[t] = high[t] - low[t];
    if (t > 0) {
      tr[t] = std::max({tr[t], std::abs(high[t] - close[t - 1]), std::abs(low[t] - close[t - 1])});
    }
  }
  return tr;
}

std::vector<double> atr(std::span<const double> high, std::span<const double> low, std::span<const double> close,
                        std::size_t window) {
  require_window(window);
  const auto tr = true_range(high, low, close);
  std::vector<double> out(tr.size(), kMasked);
  if (tr.size() < window) return out;
  const auto w = static_cast<double>(window);
  double s = 0.0;
  for (std::size_t j = 0; j < window; ++j) s += tr[j];
  out[window - 1] = s / w;
  for (std::size_t t = window; t < tr.size(); ++t) out[t] = (out[t - 1] * (w - 1.0) + tr[t]) / w;
  return out;
}

}  // namespace afca
