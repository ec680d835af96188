#pragma once

#include <cstdint>
#include <vector>

#include "afca/anomaly/anomaly.hpp"
#include "afca/features/dataset.hpp"
#include "afca/features/panel.hpp"

namespace afca {

struct SynthConfig {
  int n_assets = 10;
  int n_chars = 5;
  int T = 2000;
  int K = 1;
  double beta_scale = 1.0;      // std of the loading map entries
  double beta_intercept = 1.0;  // common loading level
  double noise_scale = 0.1;     // idiosyncratic std
  double factor_scale = 1.0;
  int anomaly_count = 0;        // spikes per asset
  double anomaly_magnitude = 8.0;  // in idiosyncratic std units
  double price_scale = 0.01;    // model return unit -> log return, for the OHLCV path
  std::int64_t start_ts = 1577836800;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  Dataset dataset;      // ready for training; row t pairs z_{t-1} with y_t
  OhlcvPanel panel;     // T+1 bars whose log returns are price_scale * y
  std::vector<TruthPoint> truth;  // injected spikes, sorted by (asset, timestamp)
};

// Characteristics z are Gaussian draws rank-normalized per hour and
// characteristic; loadings beta = intercept + z Gamma; y_t = beta_{t-1} f_t + u_t.
// Spikes of +-magnitude * noise_scale are placed one per stratum of
// T / anomaly_count rows for every asset.
SynthResult generate_synthetic(const SynthConfig& config);

}  // namespace afca
