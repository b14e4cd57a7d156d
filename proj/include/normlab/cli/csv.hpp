#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace normlab::cli {

// Shortest representation that parses back to the same double, independent
// of the C/C++ locale. Non-finite values print as nan, inf, -inf.
std::string format_number(double v);
std::string format_number(std::size_t v);

// Comma-separated, '\n' line endings, header first. Fields are never quoted,
// so callers must not pass commas or newlines.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header);

    void row(const std::vector<std::string> &fields);
    std::size_t columns() const { return columns_; }

  private:
    std::ofstream out_;
    std::size_t columns_;
};

} // namespace normlab::cli
