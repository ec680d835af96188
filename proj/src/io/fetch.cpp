#include "afca/io/fetch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "afca/errors.hpp"
#include "afca/io/csv.hpp"

namespace afca {

void FetchConfig::validate() const {
  if (hours < 1) throw ConfigError("hours must be >= 1");
  if (!(rate_limit > 0.0)) throw ConfigError("rate_limit must be > 0");
  if (retries < 0) throw ConfigError("retries must be >= 0");
  if (page_limit < 1) throw ConfigError("page_limit must be >= 1");
  if (symbols.empty()) throw ConfigError("fetch needs at least one symbol");
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw ConfigError("base_url must start with http:// or https://");
  }
  if (end_ts && *end_ts % kHourSeconds != 0) throw ConfigError("end_ts must fall on an hour boundary");
}

RateLimiter::RateLimiter(double rate)
    : interval_(std::chrono::nanoseconds(static_cast<std::int64_t>(std::ceil(1e9 / rate)))),
      burst_(std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(rate)))) {
  if (!(rate > 0.0)) throw ConfigError("rate limit must be > 0");
}

void RateLimiter::acquire() {
  auto earliest = Clock::now();
  if (!recent_.empty()) earliest = std::max(earliest, recent_.back() + interval_);
  if (recent_.size() >= burst_) earliest = std::max(earliest, recent_[recent_.size() - burst_] + std::chrono::seconds(1));
  std::this_thread::sleep_until(earliest);
  recent_.push_back(Clock::now());
  while (recent_.size() > burst_) recent_.pop_front();
}

std::vector<Bar> parse_history(const std::string& body) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception&) {
    throw ParseError("history response is not valid JSON");
  }
  if (doc.contains("Response") && doc["Response"] == "Error") {
    throw FetchError("endpoint reported an error: " + doc.value("Message", std::string("(no message)")));
  }
  if (!doc.contains("Data") || !doc["Data"].is_object()) throw ParseError("history response lacks field 'Data'");
  const auto& inner = doc["Data"];
  if (!inner.contains("Data") || !inner["Data"].is_array()) throw ParseError("history response lacks field 'Data.Data'");
  std::vector<Bar> bars;
  for (std::size_t k = 0; k < inner["Data"].size(); ++k) {
    const auto& b = inner["Data"][k];
    auto num = [&](const char* field) {
      if (!b.contains(field) || !b[field].is_number()) {
        throw ParseError("history bar " + std::to_string(k) + " lacks numeric field '" + field + "'");
      }
      return b[field].get<double>();
    };
    if (!b.contains("time") || !b["time"].is_number_integer()) {
      throw ParseError("history bar " + std::to_string(k) + " lacks integer field 'time'");
    }
    bars.push_back({b["time"].get<std::int64_t>(), num("open"), num("high"), num("low"), num("close"), num("volumefrom")});
  }
  std::sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) { return a.time < b.time; });
  return bars;
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string api_key_of(const FetchConfig& cfg) {
  if (cfg.api_key && !cfg.api_key->empty()) return *cfg.api_key;
  if (const char* env = std::getenv(kApiKeyEnv)) return env;
  return {};
}

class Fetcher {
 public:
  Fetcher(const FetchConfig& cfg, FetchStats* stats)
      : cfg_(cfg), stats_(stats), limiter_(cfg.rate_limit), endpoint_(split_url(cfg.base_url)), key_(api_key_of(cfg)) {}

  std::string page(const std::string& symbol, std::int64_t to_ts, int limit) {
    std::filesystem::path cached;
    if (!cfg_.cache_dir.empty()) {
      cached = std::filesystem::path(cfg_.cache_dir) /
               (symbol + "_" + cfg_.quote + "_" + std::to_string(to_ts) + "_" + std::to_string(limit) + ".json");
      if (std::filesystem::exists(cached)) {
        if (stats_) ++stats_->cache_hits;
        return read_text(cached);
      }
    }
    const std::string target = endpoint_.path + "?fsym=" + symbol + "&tsym=" + cfg_.quote +
                               "&limit=" + std::to_string(limit) + "&toTs=" + std::to_string(to_ts);
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!key_.empty()) headers.emplace("authorization", "Apikey " + key_);

    std::string failure;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(cfg_.backoff_seconds * std::pow(2.0, attempt - 1)));
      }
      limiter_.acquire();
      if (stats_) ++stats_->requests;
      auto res = client.Get(target, headers);
      if (!res) {
        failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        failure = "HTTP status " + std::to_string(res->status);
        continue;
      }
      parse_history(res->body);  // reject malformed pages before caching them
      if (!cached.empty()) write_text(cached, res->body);
      return res->body;
    }
    throw FetchError("fetching " + symbol + " (toTs=" + std::to_string(to_ts) + ") failed after " +
                     std::to_string(cfg_.retries + 1) + " attempts: " + failure);
  }

 private:
  const FetchConfig& cfg_;
  FetchStats* stats_;
  RateLimiter limiter_;
  Endpoint endpoint_;
  std::string key_;
};

}  // namespace

OhlcvPanel fetch_hourly(const FetchConfig& cfg, FetchStats* stats) {
  cfg.validate();
  const std::int64_t end =
      cfg.end_ts ? *cfg.end_ts : static_cast<std::int64_t>(std::time(nullptr)) / kHourSeconds * kHourSeconds;
  Fetcher fetcher(cfg, stats);

  OhlcvPanel panel;
  for (const auto& symbol : cfg.symbols) {
    std::map<std::int64_t, Bar> bars;
    std::int64_t to_ts = end;
    const auto hours = static_cast<std::size_t>(cfg.hours);
    while (bars.size() < hours) {
      const auto remaining = static_cast<int>(hours - bars.size());
      const auto page = parse_history(fetcher.page(symbol, to_ts, std::min(cfg.page_limit, remaining)));
      std::size_t fresh = 0;
      for (const auto& b : page) {
        if (b.time > to_ts || b.time <= end - static_cast<std::int64_t>(hours) * kHourSeconds) continue;
        fresh += bars.emplace(b.time, b).second ? 1 : 0;
      }
      if (fresh == 0) break;
      to_ts = bars.begin()->first - kHourSeconds;
    }
    if (bars.size() < hours) {
      throw FetchError("endpoint returned " + std::to_string(bars.size()) + " of " + std::to_string(hours) +
                       " hourly bars for " + symbol);
    }
    std::vector<std::int64_t> ts;
    OhlcvSeries s;
    for (const auto& [t, b] : bars) {
      ts.push_back(t);
      s.open.push_back(b.open);
      s.high.push_back(b.high);
      s.low.push_back(b.low);
      s.close.push_back(b.close);
      s.volume.push_back(b.volume);
    }
    if (panel.assets.empty()) {
      panel.timestamps = ts;
    } else if (ts != panel.timestamps) {
      throw AlignmentError(symbol + " bars do not share the timestamp grid of " + panel.assets.front());
    }
    panel.assets.push_back(symbol);
    panel.series.push_back(std::move(s));
  }
  panel.validate();
  return panel;
}

}  // namespace afca
