#pragma once

#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace ff {

// Shortest round-trip decimal rendering; '.' decimal point regardless of
// locale, so golden-file comparisons stay byte-stable.
std::string format_double(double v);

// Comma-separated, LF-terminated rows. Files open in binary mode so the line
// endings never vary by platform.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void row(std::initializer_list<std::string> cells);
  void row(const std::vector<std::string>& cells);

  static std::string num(double v) { return format_double(v); }
  static std::string num(std::size_t v) { return std::to_string(v); }
  static std::string num(int v) { return std::to_string(v); }

 private:
  std::ofstream out_;
};

}  // namespace ff
