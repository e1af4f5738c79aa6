#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedgan {

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);
double parse_double(std::string_view text);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(std::string_view column) const;
  std::size_t column(std::string_view column) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace fedgan
