#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autochar {

// Shortest decimal text that round-trips `v` ("nan", "inf", "-inf" for
// non-finite values).
std::string format_double(double v);

// Parses a full-field decimal number; throws FormatError naming `context`.
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);
// Empty field -> nullopt.
std::optional<double> parse_optional_double(std::string_view text,
                                            std::string_view context);

// Minimal comma-separated table: first line is the header, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws FormatError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path &file);
CsvTable parse_csv(std::string_view text, std::string_view context);

class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter &row(std::vector<std::string> fields);
  std::string str() const { return text_; }
  // Writes atomically enough for batch use; throws IoError.
  void save(const std::filesystem::path &file) const;

private:
  std::size_t columns_;
  std::string text_;
};

void write_text_file(const std::filesystem::path &file, std::string_view text);
std::string read_text_file(const std::filesystem::path &file);

} // namespace autochar
