#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "afca/features/panel.hpp"

namespace afca {

inline constexpr const char* kApiKeyEnv = "AFCA_API_KEY";

struct FetchConfig {
  std::string base_url = "https://min-api.cryptocompare.com/data/v2/histohour";
  std::vector<std::string> symbols{"BTC", "ETH", "XRP", "SOL", "SHIB", "DOT", "BNB", "AVAX", "ADA"};
  std::string quote = "USD";
  int hours = 8760;
  std::optional<std::string> api_key;  // falls back to the environment; never echoed
  double rate_limit = 5.0;             // requests per second
  int retries = 3;
  int page_limit = 2000;
  std::optional<std::int64_t> end_ts;  // last bar; defaults to the current hour
  std::string cache_dir;               // empty disables the cache
  double backoff_seconds = 0.5;        // first retry delay, doubled per attempt
  int timeout_seconds = 30;

  void validate() const;
};

// At most `rate` request starts per second: consecutive starts are 1/rate
// apart and no 1-second window holds more than max(1, floor(rate)).
class RateLimiter {
 public:
  explicit RateLimiter(double rate);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::chrono::nanoseconds interval_;
  std::size_t burst_;
  std::deque<Clock::time_point> recent_;
};

struct FetchStats {
  std::size_t requests = 0;    // HTTP requests sent, retries included
  std::size_t cache_hits = 0;
};

// Pages backwards with toTs until `hours` bars per symbol are collected.
OhlcvPanel fetch_hourly(const FetchConfig& config, FetchStats* stats = nullptr);

// Bars of one response body, ascending; throws ParseError naming a missing field.
struct Bar {
  std::int64_t time;
  double open, high, low, close, volume;
};
std::vector<Bar> parse_history(const std::string& body);

}  // namespace afca
