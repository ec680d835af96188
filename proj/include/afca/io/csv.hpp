#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "afca/features/panel.hpp"

namespace afca {

inline constexpr const char* kOhlcvHeader = "timestamp,open,high,low,close,volume";

// Plain comma splitting; none of the formats here quote fields.
std::vector<std::string> split_csv_line(std::string_view line);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Parse helpers that name the file line in their ParseError.
double parse_double(std::string_view field, std::size_t line_no, std::string_view column);
std::int64_t parse_int(std::string_view field, std::size_t line_no, std::string_view column);

// Reads all lines of a text file; a trailing newline does not produce an empty line.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// One asset per file with header `timestamp,open,high,low,close,volume`; the
// symbol is the file stem. The result is a validated single-asset panel.
OhlcvPanel load_csv(const std::filesystem::path& path);

// Every <SYMBOL>.csv in the directory, symbols in ascending order, on a shared grid.
OhlcvPanel load_csv_dir(const std::filesystem::path& dir);

std::string ohlcv_csv(const OhlcvPanel& panel, std::size_t asset);
void save_csv(const OhlcvPanel& panel, std::size_t asset, const std::filesystem::path& path);
void save_csv_dir(const OhlcvPanel& panel, const std::filesystem::path& dir);

}  // namespace afca
