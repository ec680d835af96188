#pragma once

#include <filesystem>

#include <json.hpp>

#include "afca/anomaly/anomaly.hpp"
#include "afca/features/dataset.hpp"
#include "afca/io/fetch.hpp"
#include "afca/io/synth.hpp"
#include "afca/models/model_spec.hpp"
#include "afca/training/train.hpp"

namespace afca {

using Json = nlohmann::json;

Json read_json_file(const std::filesystem::path& path);

// Each reader starts from `base`, overrides the keys present and rejects
// unknown keys with a ConfigError.
TrainConfig train_config_from_json(const Json& j, TrainConfig base);
SynthConfig synth_config_from_json(const Json& j, SynthConfig base);
FetchConfig fetch_config_from_json(const Json& j, FetchConfig base);
FeatureConfig feature_config_from_json(const Json& j, FeatureConfig base);

// Model options accepted next to the training keys in a train config.
void apply_model_options(const Json& j, ModelSpec& spec);

Json to_json(const TrainConfig& c);
Json to_json(const SynthConfig& c);
Json to_json(const FetchConfig& c);  // api_key shown only as present/absent
Json to_json(const FeatureConfig& c);
Json to_json(const ModelSpec& s);
Json to_json(const DetectConfig& c);

}  // namespace afca
