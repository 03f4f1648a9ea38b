#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace curveball::bench {

/// Header plus string cells. Fields containing commas, quotes or newlines
/// are quoted on output and unquoted on input.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column. Throws IoError when absent.
  std::size_t column(std::string_view name) const;
};

/// 17 significant digits, so parse_double(format_double(x)) == x.
/// Non-finite values print as nan, inf, -inf.
std::string format_double(double value);
double parse_double(std::string_view text);

std::string to_csv(const CsvTable& table);
/// Throws IoError on unterminated quotes or rows wider than the header.
CsvTable parse_csv(std::string_view text);

/// LF line endings. Throws IoError when the file cannot be written.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace curveball::bench
