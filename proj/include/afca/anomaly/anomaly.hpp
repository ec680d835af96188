#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "afca/features/dataset.hpp"
#include "afca/models/model.hpp"

namespace afca {

// Which residuals count as extreme: |u| (default), the lower tail or the upper tail.
enum class Tail { Abs, Lower, Upper };

const char* to_string(Tail t);
Tail tail_from_string(const std::string& s);

struct ResidualSeries {
  std::string asset;
  std::vector<std::int64_t> timestamps;
  std::vector<double> residuals;
  Split split = Split::Train;
};

struct AnomalyRecord {
  std::string asset;
  std::int64_t timestamp = 0;
  double level = 0.0;
  double residual = 0.0;
  double threshold = 0.0;
  double log_return = 0.0;

  bool operator==(const AnomalyRecord&) const = default;
};

struct AnomalyReport {
  std::vector<AnomalyRecord> records;  // sorted by (asset, timestamp, level)
  std::vector<std::string> warnings;
};

// Empirical p-quantile with linear interpolation between order statistics
// (h = (n-1) p).
double quantile(std::span<const double> values, double p);

// Abs: (1-level) quantile of |u|. Upper: (1-level) quantile of u. Lower:
// level quantile of u.
double threshold(std::span<const double> residuals, double level, Tail tail = Tail::Abs);

bool exceeds(double residual, double threshold, Tail tail = Tail::Abs);

// One record per point beyond the threshold, joined with the observed log
// return at the same index.
std::vector<AnomalyRecord> flag(const ResidualSeries& series, std::span<const double> log_returns,
                                double threshold, double level, Tail tail = Tail::Abs);

// Residuals of the ensemble on one split, one series per asset.
std::vector<ResidualSeries> residual_series(const EnsembleModel& model, const Dataset& data, Split split);

struct DetectConfig {
  std::vector<double> levels{0.01, 0.05};
  std::vector<Split> splits{Split::Train, Split::Test};
  Tail tail = Tail::Abs;

  void validate() const;
};

// Per-asset, per-split thresholds at every level.
AnomalyReport detect(const EnsembleModel& model, const Dataset& data, const DetectConfig& config);
AnomalyReport detect(std::span<const ResidualSeries> series, const Dataset& data, const DetectConfig& config);

std::string report_csv(const AnomalyReport& report);
void save_report(const AnomalyReport& report, const std::filesystem::path& path);
std::vector<AnomalyRecord> load_report(const std::filesystem::path& path);

// Plot-ready per-asset series over the detected splits:
// timestamp,log_return,prediction,residual,flag_1pct,flag_5pct
void save_series(const EnsembleModel& model, const Dataset& data, const DetectConfig& config,
                 const std::filesystem::path& dir);

struct TruthPoint {
  std::string asset;
  std::int64_t timestamp = 0;
};

std::vector<TruthPoint> load_truth(const std::filesystem::path& path);
void save_truth(std::span<const TruthPoint> truth, const std::filesystem::path& path);

struct InjectionScore {
  double precision = 0.0;  // 0 when there are no flags (see no_flags)
  double recall = 0.0;
  std::size_t flags = 0;
  std::size_t truths = 0;
  std::size_t matched = 0;
  bool no_flags = false;
};

// One-to-one matching within each asset: a flag and a truth match when their
// timestamps differ by at most tolerance_steps hours.
InjectionScore evaluate_injection(std::span<const TruthPoint> flags, std::span<const TruthPoint> truths,
                                  int tolerance_steps = 0);
InjectionScore evaluate_injection(std::span<const AnomalyRecord> records, double level,
                                  std::span<const TruthPoint> truths, int tolerance_steps = 0);

}  // namespace afca
