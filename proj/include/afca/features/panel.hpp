#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace afca {

inline constexpr std::int64_t kHourSeconds = 3600;

struct OhlcvSeries {
  std::vector<double> open, high, low, close, volume;

  std::size_t size() const { return close.size(); }
  bool operator==(const OhlcvSeries&) const = default;
};

// Hourly bars for several assets on a shared UTC timestamp grid.
struct OhlcvPanel {
  std::vector<std::string> assets;
  std::vector<std::int64_t> timestamps;
  std::vector<OhlcvSeries> series;  // parallel to assets

  std::size_t size() const { return timestamps.size(); }

  // Enforces the grid (strictly increasing, 3600 s spacing, shared by all
  // assets) and bar sanity (volume >= 0, high >= max(open, close),
  // low <= min(open, close)). Throws AlignmentError / DataError.
  void validate() const;

  bool operator==(const OhlcvPanel&) const = default;
};

}  // namespace afca
