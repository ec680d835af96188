#include "cli.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "afca/anomaly/anomaly.hpp"
#include "afca/errors.hpp"
#include "afca/features/dataset.hpp"
#include "afca/io/config.hpp"
#include "afca/io/csv.hpp"
#include "afca/io/dataset_io.hpp"
#include "afca/io/fetch.hpp"
#include "afca/io/synth.hpp"
#include "afca/models/serialize.hpp"
#include "afca/training/train.hpp"

namespace afca {

namespace {

void echo(std::ostream& out, const std::string& command, const Json& resolved) {
  out << "config " << Json{{"command", command}, {"resolved", resolved}}.dump() << "\n";
}

std::vector<Split> parse_splits(const std::string& csv) {
  std::vector<Split> out;
  for (const auto& s : split_csv_line(csv)) out.push_back(split_from_string(s));
  return out;
}

struct Options {
  std::string config, out, data, dataset, model, depth = "ca0", family, history_dir, series_dir, report, truth;
  std::string splits = "train,test", tail = "abs";
  std::vector<double> levels;
  double level = 0.01;
  int tolerance = 0;
};

int cmd_fetch(const Options& o, std::ostream& out) {
  auto cfg = fetch_config_from_json(read_json_file(o.config), FetchConfig{});
  if (!cfg.end_ts) cfg.end_ts = static_cast<std::int64_t>(std::time(nullptr)) / kHourSeconds * kHourSeconds;
  echo(out, "fetch", to_json(cfg));
  FetchStats stats;
  const auto panel = fetch_hourly(cfg, &stats);
  save_csv_dir(panel, o.out);
  out << "fetched " << panel.assets.size() << " symbols x " << panel.size() << " bars (" << stats.requests
      << " requests, " << stats.cache_hits << " cache hits) into " << o.out << "\n";
  return 0;
}

int cmd_features(const Options& o, std::ostream& out) {
  FeatureConfig cfg;
  if (!o.config.empty()) cfg = feature_config_from_json(read_json_file(o.config), cfg);
  echo(out, "features", {{"data", o.data}, {"features", to_json(cfg)}});
  const auto data = assemble(load_csv_dir(o.data), cfg);
  save_dataset(data, o.out);
  out << "dataset " << data.rows() << " rows x " << data.n_assets() << " assets (train " << data.bounds.train_end
      << ", val " << data.bounds.val_end - data.bounds.train_end << ", test " << data.rows() - data.bounds.val_end
      << ") written to " << o.out << "\n";
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto data = load_dataset(o.dataset);
  const Json file = o.config.empty() ? Json::object() : read_json_file(o.config);
  const auto kind = layer_kind_from_string(o.model);
  auto family = Family::Conditional;
  if (file.contains("family")) family = family_from_string(file.at("family").get<std::string>());
  if (!o.family.empty()) family = family_from_string(o.family);
  if (family == Family::Simple && kind != LayerKind::Linear) {
    throw ConfigError("the simple autoencoder family takes --model simple");
  }

  ModelSpec spec;
  spec.family = family;
  spec.layer_kind = kind;
  spec.depth = depth_from_string(o.depth);
  spec.n_assets = static_cast<int>(data.n_assets());
  spec.beta_hidden = family == Family::Conditional ? beta_hidden_for(spec.depth) : std::vector<int>{};
  spec.batch_norm = family == Family::Simple;
  apply_model_options(file, spec);
  spec.family = family;
  spec.n_chars = static_cast<int>(data.n_chars()) + (spec.hurst_as_characteristic ? 1 : 0);
  spec.validate();
  const auto cfg = train_config_from_json(file, TrainConfig::defaults_for(kind));
  echo(out, "train", {{"dataset", o.dataset}, {"model", to_json(spec)}, {"train", to_json(cfg)}});

  std::vector<TrainHistory> histories;
  const auto ensemble = train_ensemble(spec, data, cfg, &histories);
  save_model(ensemble, o.out);
  if (!o.history_dir.empty()) {
    std::filesystem::create_directories(o.history_dir);
    for (std::size_t k = 0; k < histories.size(); ++k) {
      save_history(histories[k], std::filesystem::path(o.history_dir) / ("seed_" + std::to_string(ensemble.seeds[k]) + ".csv"));
    }
  }
  for (std::size_t k = 0; k < histories.size(); ++k) {
    const auto& h = histories[k];
    out << "seed " << ensemble.seeds[k] << ": best epoch " << h.best_epoch << " of " << h.stopped_epoch
        << ", val mse " << format_double(h.val_loss[static_cast<std::size_t>(h.best_epoch - 1)]) << "\n";
  }
  out << "model written to " << o.out << "\n";
  return 0;
}

int cmd_detect(const Options& o, std::ostream& out, std::ostream& err) {
  DetectConfig cfg;
  if (!o.levels.empty()) cfg.levels = o.levels;
  std::sort(cfg.levels.begin(), cfg.levels.end());
  cfg.levels.erase(std::unique(cfg.levels.begin(), cfg.levels.end()), cfg.levels.end());
  cfg.splits = parse_splits(o.splits);
  cfg.tail = tail_from_string(o.tail);
  cfg.validate();
  echo(out, "detect", {{"model", o.model}, {"dataset", o.dataset}, {"detect", to_json(cfg)}});
  const auto model = load_model(o.model);
  const auto data = load_dataset(o.dataset);
  const auto report = detect(model, data, cfg);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  save_report(report, o.out);
  if (!o.series_dir.empty()) save_series(model, data, cfg, o.series_dir);
  for (double level : cfg.levels) {
    const auto n = std::count_if(report.records.begin(), report.records.end(),
                                 [&](const AnomalyRecord& r) { return r.level == level; });
    out << "level " << format_double(level) << ": " << n << " flagged\n";
  }
  out << "report written to " << o.out << "\n";
  return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const auto cfg = synth_config_from_json(read_json_file(o.config), SynthConfig{});
  echo(out, "synth", to_json(cfg));
  const auto result = generate_synthetic(cfg);
  const std::filesystem::path dir = o.out;
  save_dataset(result.dataset, dir / "dataset");
  save_csv_dir(result.panel, dir / "ohlcv");
  save_truth(result.truth, dir / "truth.csv");
  out << "synthetic dataset, OHLCV panel and " << result.truth.size() << " truth points written to " << o.out << "\n";
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  echo(out, "evaluate", {{"report", o.report}, {"truth", o.truth}, {"level", o.level}, {"tolerance", o.tolerance},
                         {"dataset", o.dataset}, {"splits", o.splits}});
  const auto records = load_report(o.report);
  auto truth = load_truth(o.truth);
  if (!o.dataset.empty()) {
    // Truth points outside the detected splits cannot be flagged.
    const auto data = load_dataset(o.dataset);
    std::vector<std::int64_t> keep;
    for (auto s : parse_splits(o.splits))
      for (auto r : data.rows_of(s)) keep.push_back(data.timestamps[r]);
    std::sort(keep.begin(), keep.end());
    std::erase_if(truth, [&](const TruthPoint& t) { return !std::binary_search(keep.begin(), keep.end(), t.timestamp); });
  }
  const auto s = evaluate_injection(records, o.level, truth, o.tolerance);
  out << "precision " << format_double(s.precision) << (s.no_flags ? " (no flags)" : "") << "\n";
  out << "recall " << format_double(s.recall) << "\n";
  out << "flags " << s.flags << " truths " << s.truths << " matched " << s.matched << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional autoencoder anomaly detection on hourly OHLCV panels", "afca"};
  app.require_subcommand(1);
  Options o;

  auto* fetch = app.add_subcommand("fetch", "Download hourly OHLCV into <SYMBOL>.csv files");
  fetch->add_option("--config", o.config, "fetch config JSON")->required()->check(CLI::ExistingFile);
  fetch->add_option("--out", o.out, "output directory")->required();

  auto* features = app.add_subcommand("features", "Build the model dataset from an OHLCV directory");
  features->add_option("--data", o.data, "directory of <SYMBOL>.csv files")->required()->check(CLI::ExistingDirectory);
  features->add_option("--out", o.out, "dataset output directory")->required();
  features->add_option("--config", o.config, "feature window config JSON")->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train a seed ensemble and save it as JSON");
  train->add_option("--dataset", o.dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--model", o.model, "beta layer kind")->required()->check(CLI::IsMember({"simple", "lstm", "aflstm"}));
  train->add_option("--depth", o.depth, "beta depth")->check(CLI::IsMember({"ca0", "ca1", "ca2", "ca3"}));
  train->add_option("--family", o.family, "model family")->check(CLI::IsMember({"simple", "conditional"}));
  train->add_option("--config", o.config, "training config JSON")->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "model JSON path")->required();
  train->add_option("--history-dir", o.history_dir, "write per-seed epoch,train_loss,val_loss CSVs here");

  auto* det = app.add_subcommand("detect", "Flag extreme residuals and write the anomaly report");
  det->add_option("--model", o.model, "model JSON")->required()->check(CLI::ExistingFile);
  det->add_option("--dataset", o.dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
  det->add_option("--level", o.levels, "extreme-value level, repeatable (default 0.01 and 0.05)");
  det->add_option("--splits", o.splits, "comma-separated splits to score")->capture_default_str();
  det->add_option("--tail", o.tail, "abs|lower|upper")->capture_default_str();
  det->add_option("--out", o.out, "report CSV path")->required();
  det->add_option("--series-dir", o.series_dir, "write per-asset plot series here");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic factor panel with injected spikes");
  synth->add_option("--config", o.config, "synth config JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", o.out, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "Score a report against injected truth times");
  eval->add_option("--report", o.report, "report CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", o.truth, "truth CSV (asset,timestamp)")->required()->check(CLI::ExistingFile);
  eval->add_option("--level", o.level, "report level to score")->capture_default_str();
  eval->add_option("--tolerance", o.tolerance, "match tolerance in hourly steps")->capture_default_str();
  eval->add_option("--dataset", o.dataset, "restrict truth to the scored splits of this dataset");
  eval->add_option("--splits", o.splits, "splits the report covers")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*fetch) return cmd_fetch(o, out);
    if (*features) return cmd_features(o, out);
    if (*train) return cmd_train(o, out);
    if (*det) return cmd_detect(o, out, err);
    if (*synth) return cmd_synth(o, out);
    if (*eval) return cmd_evaluate(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace afca
