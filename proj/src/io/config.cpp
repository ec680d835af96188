#include "afca/io/config.hpp"

#include <set>

#include "afca/errors.hpp"
#include "afca/io/csv.hpp"

namespace afca {

namespace {

const std::set<std::string> kTrainKeys{"lr", "epochs", "n_batches", "l1_lambda", "early_stop_tolerance", "n_seeds",
                                       "base_seed"};
const std::set<std::string> kModelKeys{"family", "n_factors", "seq_len", "factor_hidden", "batch_norm",
                                       "hurst_as_characteristic"};

void reject_unknown(const Json& j, const std::string& what, std::initializer_list<const std::set<std::string>*> allowed) {
  if (!j.is_object()) throw ConfigError(what + " config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const auto* set : allowed) ok = ok || set->count(key);
    if (!ok) throw ConfigError("unknown " + what + " config key '" + key + "'");
  }
}

template <class T>
void read(const Json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  reject_unknown(j, "train", {&kTrainKeys, &kModelKeys});
  read(j, "lr", c.lr);
  read(j, "epochs", c.epochs);
  read(j, "n_batches", c.n_batches);
  read(j, "l1_lambda", c.l1_lambda);
  read(j, "early_stop_tolerance", c.early_stop_tolerance);
  read(j, "n_seeds", c.n_seeds);
  read(j, "base_seed", c.base_seed);
  c.validate();
  return c;
}

void apply_model_options(const Json& j, ModelSpec& s) {
  reject_unknown(j, "train", {&kTrainKeys, &kModelKeys});
  if (j.contains("family")) s.family = family_from_string(j.at("family").get<std::string>());
  read(j, "n_factors", s.n_factors);
  read(j, "seq_len", s.seq_len);
  read(j, "factor_hidden", s.factor_hidden);
  read(j, "batch_norm", s.batch_norm);
  read(j, "hurst_as_characteristic", s.hurst_as_characteristic);
}

SynthConfig synth_config_from_json(const Json& j, SynthConfig c) {
  static const std::set<std::string> keys{"n_assets", "n_chars", "T", "K", "beta_scale", "beta_intercept",
                                          "noise_scale", "factor_scale", "anomaly_count", "anomaly_magnitude",
                                          "price_scale", "start_ts", "seed"};
  reject_unknown(j, "synth", {&keys});
  read(j, "n_assets", c.n_assets);
  read(j, "n_chars", c.n_chars);
  read(j, "T", c.T);
  read(j, "K", c.K);
  read(j, "beta_scale", c.beta_scale);
  read(j, "beta_intercept", c.beta_intercept);
  read(j, "noise_scale", c.noise_scale);
  read(j, "factor_scale", c.factor_scale);
  read(j, "anomaly_count", c.anomaly_count);
  read(j, "anomaly_magnitude", c.anomaly_magnitude);
  read(j, "price_scale", c.price_scale);
  read(j, "start_ts", c.start_ts);
  read(j, "seed", c.seed);
  c.validate();
  return c;
}

FetchConfig fetch_config_from_json(const Json& j, FetchConfig c) {
  static const std::set<std::string> keys{"base_url", "symbols", "quote", "hours", "rate_limit", "retries",
                                          "page_limit", "end_ts", "cache_dir", "backoff_seconds", "timeout_seconds"};
  if (j.is_object() && j.contains("api_key")) {
    throw ConfigError("api_key does not belong in a config file; set " + std::string(kApiKeyEnv) + " instead");
  }
  reject_unknown(j, "fetch", {&keys});
  read(j, "base_url", c.base_url);
  read(j, "symbols", c.symbols);
  read(j, "quote", c.quote);
  read(j, "hours", c.hours);
  read(j, "rate_limit", c.rate_limit);
  read(j, "retries", c.retries);
  read(j, "page_limit", c.page_limit);
  if (j.contains("end_ts")) c.end_ts = j.at("end_ts").get<std::int64_t>();
  read(j, "cache_dir", c.cache_dir);
  read(j, "backoff_seconds", c.backoff_seconds);
  read(j, "timeout_seconds", c.timeout_seconds);
  c.validate();
  return c;
}

FeatureConfig feature_config_from_json(const Json& j, FeatureConfig c) {
  static const std::set<std::string> keys{"sma_window", "dema_window", "cci_window", "atr_window", "hurst_window"};
  reject_unknown(j, "features", {&keys});
  read(j, "sma_window", c.sma_window);
  read(j, "dema_window", c.dema_window);
  read(j, "cci_window", c.cci_window);
  read(j, "atr_window", c.atr_window);
  read(j, "hurst_window", c.hurst_window);
  return c;
}

Json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},         {"epochs", c.epochs}, {"n_batches", c.n_batches}, {"l1_lambda", c.l1_lambda},
          {"early_stop_tolerance", c.early_stop_tolerance}, {"n_seeds", c.n_seeds}, {"base_seed", c.base_seed}};
}

Json to_json(const SynthConfig& c) {
  return {{"n_assets", c.n_assets},
          {"n_chars", c.n_chars},
          {"T", c.T},
          {"K", c.K},
          {"beta_scale", c.beta_scale},
          {"beta_intercept", c.beta_intercept},
          {"noise_scale", c.noise_scale},
          {"factor_scale", c.factor_scale},
          {"anomaly_count", c.anomaly_count},
          {"anomaly_magnitude", c.anomaly_magnitude},
          {"price_scale", c.price_scale},
          {"start_ts", c.start_ts},
          {"seed", c.seed}};
}

Json to_json(const FetchConfig& c) {
  Json j{{"base_url", c.base_url},
         {"symbols", c.symbols},
         {"quote", c.quote},
         {"hours", c.hours},
         {"rate_limit", c.rate_limit},
         {"retries", c.retries},
         {"page_limit", c.page_limit},
         {"cache_dir", c.cache_dir},
         {"backoff_seconds", c.backoff_seconds},
         {"timeout_seconds", c.timeout_seconds},
         {"api_key", (c.api_key && !c.api_key->empty()) ? "<set>" : "<unset>"}};
  j["end_ts"] = c.end_ts ? Json(*c.end_ts) : Json(nullptr);
  return j;
}

Json to_json(const FeatureConfig& c) {
  return {{"sma_window", c.sma_window},
          {"dema_window", c.dema_window},
          {"cci_window", c.cci_window},
          {"atr_window", c.atr_window},
          {"hurst_window", c.hurst_window}};
}

Json to_json(const ModelSpec& s) {
  return {{"family", to_string(s.family)},
          {"layer_kind", to_string(s.layer_kind)},
          {"depth", to_string(s.depth)},
          {"n_assets", s.n_assets},
          {"n_chars", s.n_chars},
          {"n_factors", s.n_factors},
          {"beta_hidden", s.beta_hidden},
          {"factor_hidden", s.factor_hidden},
          {"seq_len", s.seq_len},
          {"batch_norm", s.batch_norm},
          {"hurst_as_characteristic", s.hurst_as_characteristic}};
}

Json to_json(const DetectConfig& c) {
  std::vector<std::string> splits;
  for (auto s : c.splits) splits.emplace_back(to_string(s));
  return {{"levels", c.levels}, {"splits", splits}, {"tail", to_string(c.tail)}};
}

}  // namespace afca
