#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "afca/features/normalize.hpp"
#include "afca/features/panel.hpp"
#include "afca/numcore/tensor.hpp"

namespace afca {

enum class Split { Train, Validation, Test };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

// Rows [0, train_end) train, [train_end, val_end) validation, [val_end, T) test.
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  bool operator==(const SplitBounds&) const = default;
};

// 70/15/15 temporal split; train and validation sizes are floored and the
// remainder goes to test.
SplitBounds split(std::size_t usable_rows);

// Model-ready tensors. Row t of x1/x2 carries information up to hour t-1;
// row t of y is the return realized at timestamps[t].
struct Dataset {
  std::vector<std::string> assets;
  std::vector<std::int64_t> timestamps;
  Tensor<double> x1;           // T x N x C characteristics
  Tensor<double> x2;           // T x N x 1 Hurst exponent
  Tensor<double> y;            // T x N model target
  Tensor<double> log_returns;  // T x N observed log returns (for reporting)
  SplitBounds bounds;
  std::vector<ScalerStats> x1_scaler;
  std::vector<ScalerStats> y_scaler;

  std::size_t rows() const { return timestamps.size(); }
  std::size_t n_assets() const { return assets.size(); }
  std::size_t n_chars() const { return x1.rank() == 3 ? x1.dim(2) : 0; }
  std::vector<std::size_t> rows_of(Split s) const;

  // Throws DataError when tensor shapes disagree with the row/asset counts.
  void validate() const;
};

struct FeatureConfig {
  std::size_t sma_window = 24;
  std::size_t dema_window = 12;
  std::size_t cci_window = 24;
  std::size_t atr_window = 24;
  std::size_t hurst_window = 512;
};

// Builds the dataset from a validated panel: indicators and Hurst per asset,
// lagged one hour against returns, warm-up rows dropped panel-wide, X1 and Y
// rank-normalized per hour then standardized with train-fitted statistics.
Dataset assemble(const OhlcvPanel& panel, const FeatureConfig& config);

}  // namespace afca
