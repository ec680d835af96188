#pragma once

#include <span>
#include <vector>

namespace afca {

// Cross-sectional rank normalization: ascending ranks 1..N (ties share the
// average rank) mapped to 2 r / (N + 1) - 1, strictly inside (-1, 1).
std::vector<double> rank_normalize(std::span<const double> values);

struct ScalerStats {
  double mean = 0.0;
  double std = 1.0;

  bool operator==(const ScalerStats&) const = default;
};

// Per-feature standardization fitted on training rows only. A zero-variance
// feature is centered but not scaled.
class StandardScaler {
 public:
  // samples[k] holds all training values of feature k.
  void fit(const std::vector<std::vector<double>>& samples);
  void set(std::vector<ScalerStats> stats) { stats_ = std::move(stats); }
  bool fitted() const { return !stats_.empty(); }
  const std::vector<ScalerStats>& stats() const { return stats_; }

  double transform(std::size_t feature, double value) const;
  std::vector<double> transform(std::size_t feature, std::span<const double> values) const;

 private:
  std::vector<ScalerStats> stats_;
};

}  // namespace afca
