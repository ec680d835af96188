#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace afca {

inline constexpr std::size_t kMinHurstWindow = 64;

// Rescaled-range estimate over sub-lengths 8, 16, 32, ... <= x.size(): the
// least-squares slope of log mean(R/S) against log n, clamped to [0, 1].
// Returns 0.5 when fewer than two sub-lengths carry any variance.
double hurst_rs(std::span<const double> x);

// hurst_rs over each trailing window; the first window-1 outputs are masked.
std::vector<double> rolling_hurst(std::span<const double> x, std::size_t window = 512);

}  // namespace afca
