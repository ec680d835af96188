#include "afca/anomaly/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "afca/io/csv.hpp"

namespace afca {

const char* to_string(Tail t) {
  switch (t) {
    case Tail::Abs: return "abs";
    case Tail::Lower: return "lower";
    case Tail::Upper: return "upper";
  }
  return "?";
}

Tail tail_from_string(const std::string& s) {
  if (s == "abs") return Tail::Abs;
  if (s == "lower") return Tail::Lower;
  if (s == "upper") return Tail::Upper;
  throw ConfigError("unknown tail '" + s + "' (expected abs|lower|upper)");
}

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile probability must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = static_cast<double>(v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double threshold(std::span<const double> residuals, double level, Tail tail) {
  if (residuals.empty()) throw DataError("threshold of an empty residual series");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  switch (tail) {
    case Tail::Abs: {
      std::vector<double> a(residuals.size());
      std::transform(residuals.begin(), residuals.end(), a.begin(), [](double u) { return std::abs(u); });
      return quantile(a, 1.0 - level);
    }
    case Tail::Upper: return quantile(residuals, 1.0 - level);
    case Tail::Lower: return quantile(residuals, level);
  }
  return 0.0;
}

bool exceeds(double residual, double thr, Tail tail) {
  switch (tail) {
    case Tail::Abs: return std::abs(residual) >= thr;
    case Tail::Upper: return residual >= thr;
    case Tail::Lower: return residual <= thr;
  }
  return false;
}

std::vector<AnomalyRecord> flag(const ResidualSeries& series, std::span<const double> log_returns, double thr,
                                double level, Tail tail) {
  if (series.timestamps.size() != series.residuals.size()) {
    throw AlignmentError("residual series for " + series.asset + " has mismatched timestamps");
  }
  if (log_returns.size() != series.residuals.size()) {
    throw AlignmentError("cannot join " + std::to_string(series.residuals.size()) + " residuals of " + series.asset +
                         " with " + std::to_string(log_returns.size()) + " log returns");
  }
  std::vector<AnomalyRecord> out;
  for (std::size_t t = 0; t < series.residuals.size(); ++t) {
    if (exceeds(series.residuals[t], thr, tail)) {
      out.push_back({series.asset, series.timestamps[t], level, series.residuals[t], thr, log_returns[t]});
    }
  }
  return out;
}

std::vector<ResidualSeries> residual_series(const EnsembleModel& model, const Dataset& data, Split split) {
  const auto rows = data.rows_of(split);
  const MatrixXd u = model.residual(data, rows);
  std::vector<ResidualSeries> out;
  for (std::size_t i = 0; i < data.n_assets(); ++i) {
    ResidualSeries s;
    s.asset = data.assets[i];
    s.split = split;
    for (std::size_t b = 0; b < rows.size(); ++b) {
      s.timestamps.push_back(data.timestamps[rows[b]]);
      s.residuals.push_back(u(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void DetectConfig::validate() const {
  if (levels.empty()) throw ConfigError("detect needs at least one level");
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("level must lie in (0, 1), got " + format_double(l));
  if (splits.empty()) throw ConfigError("detect needs at least one split");
}

AnomalyReport detect(std::span<const ResidualSeries> series, const Dataset& data, const DetectConfig& config) {
  config.validate();
  std::map<std::string, std::size_t> asset_index;
  for (std::size_t i = 0; i < data.assets.size(); ++i) asset_index[data.assets[i]] = i;
  std::map<std::int64_t, std::size_t> row_index;
  for (std::size_t r = 0; r < data.rows(); ++r) row_index[data.timestamps[r]] = r;

  AnomalyReport report;
  for (const auto& s : series) {
    const auto ai = asset_index.find(s.asset);
    if (ai == asset_index.end()) throw AlignmentError("residual series for unknown asset " + s.asset);
    std::vector<double> lr;
    for (auto ts : s.timestamps) {
      const auto ri = row_index.find(ts);
      if (ri == row_index.end()) throw AlignmentError("no observed log return for " + s.asset + " at " + std::to_string(ts));
      lr.push_back(data.log_returns(ri->second, ai->second));
    }
    for (double level : config.levels) {
      const double thr = threshold(s.residuals, level, config.tail);
      auto recs = flag(s, lr, thr, level, config.tail);
      if (config.tail == Tail::Abs && thr == 0.0) {
        report.warnings.push_back("zero threshold for " + s.asset + " (" + to_string(s.split) + ", level " +
                                  format_double(level) + "): every zero residual is flagged");
      }
      report.records.insert(report.records.end(), recs.begin(), recs.end());
    }
  }
  std::sort(report.records.begin(), report.records.end(), [](const AnomalyRecord& a, const AnomalyRecord& b) {
    if (a.asset != b.asset) return a.asset < b.asset;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.level < b.level;
  });
  return report;
}

AnomalyReport detect(const EnsembleModel& model, const Dataset& data, const DetectConfig& config) {
  config.validate();
  std::vector<ResidualSeries> all;
  for (auto split : config.splits) {
    auto s = residual_series(model, data, split);
    all.insert(all.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return detect(all, data, config);
}

std::string report_csv(const AnomalyReport& report) {
  std::string out = "asset,timestamp,level,residual,threshold,log_return\n";
  for (const auto& r : report.records) {
    out += r.asset + ',' + std::to_string(r.timestamp) + ',' + format_double(r.level) + ',' + format_double(r.residual) +
           ',' + format_double(r.threshold) + ',' + format_double(r.log_return) + '\n';
  }
  return out;
}

void save_report(const AnomalyReport& report, const std::filesystem::path& path) {
  write_text(path, report_csv(report));
}

std::vector<AnomalyRecord> load_report(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "asset,timestamp,level,residual,threshold,log_return") {
    throw ParseError(path.string() + ": not an anomaly report (bad header)");
  }
  std::vector<AnomalyRecord> out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const auto f = split_csv_line(lines[k]);
    if (f.size() != 6) throw ParseError(path.string() + ": line " + std::to_string(k + 1) + " needs 6 fields");
    out.push_back({f[0], parse_int(f[1], k + 1, "timestamp"), parse_double(f[2], k + 1, "level"),
                   parse_double(f[3], k + 1, "residual"), parse_double(f[4], k + 1, "threshold"),
                   parse_double(f[5], k + 1, "log_return")});
  }
  return out;
}

void save_series(const EnsembleModel& model, const Dataset& data, const DetectConfig& config,
                 const std::filesystem::path& dir) {
  config.validate();
  std::filesystem::create_directories(dir);
  std::vector<std::size_t> rows;
  for (auto split : config.splits) {
    const auto r = data.rows_of(split);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::sort(rows.begin(), rows.end());
  const MatrixXd pred = model.predict(data, rows);
  for (std::size_t i = 0; i < data.n_assets(); ++i) {
    // thresholds stay per split, as in detect()
    std::map<std::int64_t, std::pair<bool, bool>> flags;
    for (auto split : config.splits) {
      const auto split_rows = data.rows_of(split);
      std::vector<double> u;
      for (auto r : split_rows) {
        const auto b = static_cast<Eigen::Index>(std::lower_bound(rows.begin(), rows.end(), r) - rows.begin());
        u.push_back(data.y(r, i) - pred(b, static_cast<Eigen::Index>(i)));
      }
      const double t1 = threshold(u, 0.01, config.tail), t5 = threshold(u, 0.05, config.tail);
      for (std::size_t k = 0; k < split_rows.size(); ++k) {
        flags[data.timestamps[split_rows[k]]] = {exceeds(u[k], t1, config.tail), exceeds(u[k], t5, config.tail)};
      }
    }
    std::string out = "timestamp,log_return,prediction,residual,flag_1pct,flag_5pct\n";
    for (std::size_t b = 0; b < rows.size(); ++b) {
      const auto r = rows[b];
      const double p = pred(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i));
      const auto [f1, f5] = flags[data.timestamps[r]];
      out += std::to_string(data.timestamps[r]) + ',' + format_double(data.log_returns(r, i)) + ',' + format_double(p) +
             ',' + format_double(data.y(r, i) - p) + ',' + (f1 ? "1" : "0") + ',' + (f5 ? "1" : "0") + '\n';
    }
    write_text(dir / (data.assets[i] + ".csv"), out);
  }
}

std::vector<TruthPoint> load_truth(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "asset,timestamp") throw ParseError(path.string() + ": header must be 'asset,timestamp'");
  std::vector<TruthPoint> out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const auto f = split_csv_line(lines[k]);
    if (f.size() != 2) throw ParseError(path.string() + ": line " + std::to_string(k + 1) + " needs 2 fields");
    out.push_back({f[0], parse_int(f[1], k + 1, "timestamp")});
  }
  return out;
}

void save_truth(std::span<const TruthPoint> truth, const std::filesystem::path& path) {
  std::string out = "asset,timestamp\n";
  for (const auto& t : truth) out += t.asset + ',' + std::to_string(t.timestamp) + '\n';
  write_text(path, out);
}

InjectionScore evaluate_injection(std::span<const TruthPoint> flags, std::span<const TruthPoint> truths,
                                  int tolerance_steps) {
  if (tolerance_steps < 0) throw ConfigError("tolerance_steps must be >= 0");
  const std::int64_t tol = static_cast<std::int64_t>(tolerance_steps) * kHourSeconds;
  std::map<std::string, std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> by_asset;
  for (const auto& f : flags) by_asset[f.asset].first.push_back(f.timestamp);
  for (const auto& t : truths) by_asset[t.asset].second.push_back(t.timestamp);

  InjectionScore s;
  s.flags = flags.size();
  s.truths = truths.size();
  for (auto& [asset, ft] : by_asset) {
    auto& [fs, ts] = ft;
    std::sort(fs.begin(), fs.end());
    std::sort(ts.begin(), ts.end());
    // Sweep: each flag takes the earliest still-unmatched truth inside its
    // window. With equal-width windows on a line this is a maximum matching.
    std::size_t j = 0;
    for (auto f : fs) {
      while (j < ts.size() && ts[j] < f - tol) ++j;
      if (j < ts.size() && ts[j] <= f + tol) {
        ++s.matched;
        ++j;
      }
    }
  }
  s.no_flags = s.flags == 0;
  s.precision = s.flags ? static_cast<double>(s.matched) / static_cast<double>(s.flags) : 0.0;
  s.recall = s.truths ? static_cast<double>(s.matched) / static_cast<double>(s.truths) : 0.0;
  return s;
}

InjectionScore evaluate_injection(std::span<const AnomalyRecord> records, double level,
                                  std::span<const TruthPoint> truths, int tolerance_steps) {
  std::vector<TruthPoint> flags;
  for (const auto& r : records)
    if (r.level == level) flags.push_back({r.asset, r.timestamp});
  return evaluate_injection(flags, truths, tolerance_steps);
}

}  // namespace afca
