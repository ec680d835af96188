#include "afca/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>

#include "afca/errors.hpp"

namespace afca {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view field, std::size_t line_no, std::string_view column) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || field.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": column '" + std::string(column) + "' is not a number: '" +
                     std::string(field) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view field, std::size_t line_no, std::string_view column) {
  std::int64_t v = 0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || field.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": column '" + std::string(column) +
                     "' is not an integer: '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

OhlcvPanel load_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kOhlcvHeader) {
    throw ParseError(path.string() + ": header must be exactly '" + kOhlcvHeader + "'");
  }
  OhlcvPanel panel;
  panel.assets = {path.stem().string()};
  OhlcvSeries s;
  static const char* cols[] = {"timestamp", "open", "high", "low", "close", "volume"};
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto line_no = k + 1;
    if (lines[k].empty()) continue;
    const auto f = split_csv_line(lines[k]);
    if (f.size() != 6) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                       " fields, expected 6");
    }
    try {
      panel.timestamps.push_back(parse_int(f[0], line_no, cols[0]));
      s.open.push_back(parse_double(f[1], line_no, cols[1]));
      s.high.push_back(parse_double(f[2], line_no, cols[2]));
      s.low.push_back(parse_double(f[3], line_no, cols[3]));
      s.close.push_back(parse_double(f[4], line_no, cols[4]));
      s.volume.push_back(parse_double(f[5], line_no, cols[5]));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    const auto t = s.close.size() - 1;
    const bool bad_bar = s.high[t] < s.low[t] || s.high[t] < std::max(s.open[t], s.close[t]) ||
                         s.low[t] > std::min(s.open[t], s.close[t]) || s.volume[t] < 0.0;
    if (bad_bar) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) +
                      " violates volume >= 0 and high >= max(open, close) >= min(open, close) >= low");
    }
  }
  panel.series = {std::move(s)};
  panel.validate();
  return panel;
}

OhlcvPanel load_csv_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  if (files.empty()) throw DataError("no <SYMBOL>.csv files in " + dir.string());
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.stem().string() < b.stem().string(); });
  OhlcvPanel panel;
  for (const auto& f : files) {
    auto one = load_csv(f);
    if (panel.assets.empty()) {
      panel.timestamps = one.timestamps;
    } else if (one.timestamps != panel.timestamps) {
      throw AlignmentError(f.string() + " does not share the timestamp grid of " + panel.assets.front());
    }
    panel.assets.push_back(one.assets.front());
    panel.series.push_back(std::move(one.series.front()));
  }
  panel.validate();
  return panel;
}

std::string ohlcv_csv(const OhlcvPanel& panel, std::size_t asset) {
  const auto& s = panel.series.at(asset);
  std::string out = std::string(kOhlcvHeader) + "\n";
  for (std::size_t t = 0; t < panel.timestamps.size(); ++t) {
    out += std::to_string(panel.timestamps[t]) + ',' + format_double(s.open[t]) + ',' + format_double(s.high[t]) +
           ',' + format_double(s.low[t]) + ',' + format_double(s.close[t]) + ',' + format_double(s.volume[t]) + '\n';
  }
  return out;
}

void save_csv(const OhlcvPanel& panel, std::size_t asset, const std::filesystem::path& path) {
  write_text(path, ohlcv_csv(panel, asset));
}

void save_csv_dir(const OhlcvPanel& panel, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t a = 0; a < panel.assets.size(); ++a) save_csv(panel, a, dir / (panel.assets[a] + ".csv"));
}

}  // namespace afca
