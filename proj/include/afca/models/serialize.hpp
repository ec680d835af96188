#pragma once

#include <filesystem>
#include <string>

#include "afca/models/model.hpp"

namespace afca {

// JSON document {format, spec, seeds, arrays:[{name, shape, values}]}; array
// names are "m<k>/<param>" for member k. Doubles are written with the
// shortest round-trip representation, so load -> save is byte-stable.
std::string to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(const std::string& text);

void save_model(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_model(const std::filesystem::path& path);

}  // namespace afca
