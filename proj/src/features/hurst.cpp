#include "afca/features/hurst.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afca/errors.hpp"
#include "afca/features/indicators.hpp"

namespace afca {

namespace {

// Mean R/S over the contiguous blocks of length n; 0 when no block has variance.
double mean_rescaled_range(std::span<const double> x, std::size_t n) {
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t start = 0; start + n <= x.size(); start += n) {
    const auto block = x.subspan(start, n);
    double mean = 0.0;
    for (double v : block) mean += v;
    mean /= static_cast<double>(n);
    double cum = 0.0, lo = 0.0, hi = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = block[k] - mean;
      cum += d;
      ss += d * d;
      if (k == 0 || cum < lo) lo = cum;
      if (k == 0 || cum > hi) hi = cum;
    }
    const double s = std::sqrt(ss / static_cast<double>(n));
    if (s > 0.0) {
      total += (hi - lo) / s;
      ++used;
    }
  }
  return used == 0 ? 0.0 : total / static_cast<double>(used);
}

}  // namespace

double hurst_rs(std::span<const double> x) {
  std::vector<double> lx, ly;
  for (std::size_t n = 8; n <= x.size(); n *= 2) {
    const double rs = mean_rescaled_range(x, n);
    if (rs > 0.0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(rs));
    }
  }
  if (lx.size() < 2) return 0.5;
  const auto m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double h = sxy / sxx;
  return std::clamp(h, 0.0, 1.0);
}

std::vector<double> rolling_hurst(std::span<const double> x, std::size_t window) {
  if (window < kMinHurstWindow) {
    throw ConfigError("Hurst window must be >= " + std::to_string(kMinHurstWindow) + ", got " + std::to_string(window));
  }
  std::vector<double> out(x.size(), kMasked);
  for (std::size_t t = window - 1; t < x.size(); ++t) out[t] = hurst_rs(x.subspan(t + 1 - window, window));
  return out;
}

}  // namespace afca
