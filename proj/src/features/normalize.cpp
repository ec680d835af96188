#include "afca/features/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "afca/errors.hpp"

namespace afca {

std::vector<double> rank_normalize(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) tie; average 1-based rank
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = 2.0 * rank / (static_cast<double>(n) + 1.0) - 1.0;
    i = j + 1;
  }
  return out;
}

void StandardScaler::fit(const std::vector<std::vector<double>>& samples) {
  std::vector<ScalerStats> stats;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.empty()) throw DataError("scaler feature " + std::to_string(k) + " has no training values");
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size());
    stats.push_back({mean, std::sqrt(var)});
  }
  stats_ = std::move(stats);
}

double StandardScaler::transform(std::size_t feature, double value) const {
  if (!fitted()) throw StateError("scaler used before fit");
  if (feature >= stats_.size()) throw ShapeError("scaler has no feature " + std::to_string(feature));
  const auto& s = stats_[feature];
  return s.std > 0.0 ? (value - s.mean) / s.std : value - s.mean;
}

std::vector<double> StandardScaler::transform(std::size_t feature, std::span<const double> values) const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = transform(feature, values[i]);
  return out;
}

}  // namespace afca
