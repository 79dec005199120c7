#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace realera {

// Minimal CSV with header row, UTF-8, LF line endings.  Fields containing
// commas, quotes, or newlines are quoted with doubled inner quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

// Shortest representation that parses back to the identical double.
std::string format_double(double value);
double parse_double(const std::string& field);

}  // namespace realera
