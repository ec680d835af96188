#include "afca/io/dataset_io.hpp"

#include <algorithm>

#include <json.hpp>

#include "afca/errors.hpp"
#include "afca/io/csv.hpp"

namespace afca {

namespace {

using nlohmann::json;

constexpr const char* kTensorHeader = "t,asset,feature,value";

std::string tensor_csv(const Tensor<double>& x, const std::vector<std::string>& assets) {
  std::string out = std::string(kTensorHeader) + "\n";
  const auto T = x.dim(0), N = x.dim(1), C = x.rank() == 3 ? x.dim(2) : 1;
  const auto data = x.data();
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t c = 0; c < C; ++c) {
        out += std::to_string(t) + ',' + assets[i] + ',' + std::to_string(c) + ',' +
               format_double(data[(t * N + i) * C + c]) + '\n';
      }
  return out;
}

Tensor<double> read_tensor(const std::filesystem::path& path, std::vector<std::size_t> shape,
                           const std::vector<std::string>& assets) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kTensorHeader) {
    throw ParseError(path.string() + ": header must be exactly '" + kTensorHeader + "'");
  }
  const auto T = shape[0], N = shape[1], C = shape.size() == 3 ? shape[2] : 1;
  std::vector<double> data(T * N * C);
  std::vector<bool> seen(data.size(), false);
  std::size_t count = 0;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const auto f = split_csv_line(lines[k]);
    const auto line_no = k + 1;
    if (f.size() != 4) throw ParseError(path.string() + ": line " + std::to_string(line_no) + " needs 4 fields");
    try {
      const auto t = parse_int(f[0], line_no, "t");
      const auto c = parse_int(f[2], line_no, "feature");
      const auto ai = std::find(assets.begin(), assets.end(), f[1]);
      if (ai == assets.end()) throw ParseError("line " + std::to_string(line_no) + ": unknown asset '" + f[1] + "'");
      if (t < 0 || static_cast<std::size_t>(t) >= T || c < 0 || static_cast<std::size_t>(c) >= C) {
        throw ParseError("line " + std::to_string(line_no) + ": index out of range");
      }
      const auto idx = (static_cast<std::size_t>(t) * N + static_cast<std::size_t>(ai - assets.begin())) * C +
                       static_cast<std::size_t>(c);
      if (seen[idx]) throw ParseError("line " + std::to_string(line_no) + ": duplicate entry");
      seen[idx] = true;
      data[idx] = parse_double(f[3], line_no, "value");
      ++count;
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  if (count != data.size()) {
    throw DataError(path.string() + ": expected " + std::to_string(data.size()) + " entries, found " +
                    std::to_string(count));
  }
  return Tensor<double>(std::move(shape), std::move(data));
}

json stats_json(const std::vector<ScalerStats>& s) {
  json a = json::array();
  for (const auto& x : s) a.push_back({{"mean", x.mean}, {"std", x.std}});
  return a;
}

std::vector<ScalerStats> stats_from_json(const json& a) {
  std::vector<ScalerStats> out;
  for (const auto& x : a) out.push_back({x.at("mean").get<double>(), x.at("std").get<double>()});
  return out;
}

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  data.validate();
  std::filesystem::create_directories(dir);
  write_text(dir / "X1.csv", tensor_csv(data.x1, data.assets));
  write_text(dir / "X2.csv", tensor_csv(data.x2, data.assets));
  write_text(dir / "Y.csv", tensor_csv(data.y, data.assets));
  write_text(dir / "returns.csv", tensor_csv(data.log_returns, data.assets));
  json meta{{"assets", data.assets},
            {"timestamps", data.timestamps},
            {"n_chars", data.n_chars()},
            {"train_end", data.bounds.train_end},
            {"val_end", data.bounds.val_end},
            {"x1_scaler", stats_json(data.x1_scaler)},
            {"y_scaler", stats_json(data.y_scaler)}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  Dataset d;
  json meta;
  try {
    meta = json::parse(read_text(dir / "meta.json"));
    d.assets = meta.at("assets").get<std::vector<std::string>>();
    d.timestamps = meta.at("timestamps").get<std::vector<std::int64_t>>();
    d.bounds = {meta.at("train_end").get<std::size_t>(), meta.at("val_end").get<std::size_t>()};
    d.x1_scaler = stats_from_json(meta.at("x1_scaler"));
    d.y_scaler = stats_from_json(meta.at("y_scaler"));
    const auto C = meta.at("n_chars").get<std::size_t>();
    const auto T = d.timestamps.size(), N = d.assets.size();
    d.x1 = read_tensor(dir / "X1.csv", {T, N, C}, d.assets);
    d.x2 = read_tensor(dir / "X2.csv", {T, N, 1}, d.assets);
    d.y = read_tensor(dir / "Y.csv", {T, N}, d.assets);
    d.log_returns = read_tensor(dir / "returns.csv", {T, N}, d.assets);
  } catch (const json::exception& e) {
    throw ParseError(dir.string() + "/meta.json: " + e.what());
  }
  d.validate();
  return d;
}

}  // namespace afca
