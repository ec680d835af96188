#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace afca {

// Undefined (warm-up) outputs are NaN.
inline constexpr double kMasked = std::numeric_limits<double>::quiet_NaN();
inline bool is_masked(double v) { return std::isnan(v); }

// r_t = ln(c_t / c_{t-1}); one element shorter than the input.
std::vector<double> log_returns(std::span<const double> close);

// Rolling mean; the first window-1 outputs are masked.
std::vector<double> sma(std::span<const double> x, std::size_t window = 24);

// EMA with alpha = 2 / (window + 1), seeded with the first value.
std::vector<double> ema(std::span<const double> x, std::size_t window);

// 2 EMA(x) - EMA(EMA(x)); the first window-1 outputs are masked.
std::vector<double> dema(std::span<const double> x, std::size_t window = 12);

// Commodity channel index on the typical price (H+L+C)/3. A window with zero
// mean absolute deviation yields 0.
std::vector<double> cci(std::span<const double> high, std::span<const double> low, std::span<const double> close,
                        std::size_t window = 24);

// Accumulation/distribution line, cumulative from the first bar. Bars with
// high == low contribute nothing.
std::vector<double> ad(std::span<const double> high, std::span<const double> low, std::span<const double> close,
                       std::span<const double> volume);

// True range; the first bar has no previous close and uses high - low.
std::vector<double> true_range(std::span<const double> high, std::span<const double> low,
                               std::span<const double> close);

// Wilder-smoothed average true range, seeded with the mean of the first
// `window` true ranges; the first window-1 outputs are masked.
std::vector<double> atr(std::span<const double> high, std::span<const double> low, std::span<const double> close,
                        std::size_t window = 24);

}  // namespace afca
