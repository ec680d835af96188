#pragma once

#include <filesystem>

#include "afca/features/dataset.hpp"

namespace afca {

// Directory layout: X1.csv, X2.csv, Y.csv, returns.csv (header
// `t,asset,feature,value`, t is the row index) and meta.json with assets,
// timestamps, split bounds and scaler statistics.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace afca
