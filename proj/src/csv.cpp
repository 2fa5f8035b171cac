#include "autochar/csv.hpp"

#include "autochar/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace autochar {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto field = line.substr(start, comma == std::string_view::npos
                                              ? std::string_view::npos
                                              : comma - start);
    out.emplace_back(trim(field));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

} // namespace

std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
  text = trim(text);
  if (text == "inf")
    return INFINITY;
  if (text == "-inf")
    return -INFINITY;
  double v = 0.0;
  if (!text.empty() && text.front() == '+')
    text.remove_prefix(1);
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} ||
      res.ptr != text.data() + text.size())
    throw FormatError(std::string(context) + ": expected a number, got '" +
                      std::string(text) + "'");
  return v;
}

long long parse_int(std::string_view text, std::string_view context) {
  text = trim(text);
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} ||
      res.ptr != text.data() + text.size())
    throw FormatError(std::string(context) + ": expected an integer, got '" +
                      std::string(text) + "'");
  return v;
}

std::optional<double> parse_optional_double(std::string_view text,
                                            std::string_view context) {
  if (trim(text).empty())
    return std::nullopt;
  return parse_double(text, context);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name)
      return i;
  throw FormatError("csv: missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, std::string_view context) {
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#')
      continue;
    auto fields = split_fields(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size())
        throw FormatError(std::string(context) + ":" + std::to_string(line_no) +
                          ": expected " + std::to_string(table.header.size()) +
                          " fields, got " + std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (first)
    throw FormatError(std::string(context) + ": empty CSV");
  return table;
}

CsvTable read_csv(const std::filesystem::path &file) {
  return parse_csv(read_text_file(file), file.string());
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : columns_(header.size()) {
  row(std::move(header));
}

CsvWriter &CsvWriter::row(std::vector<std::string> fields) {
  if (fields.size() != columns_)
    throw DomainError("csv: row width does not match header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i)
      text_ += ',';
    text_ += fields[i];
  }
  text_ += '\n';
  return *this;
}

void CsvWriter::save(const std::filesystem::path &file) const {
  write_text_file(file, text_);
}

void write_text_file(const std::filesystem::path &file, std::string_view text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + file.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out)
    throw IoError("write failed: " + file.string());
}

std::string read_text_file(const std::filesystem::path &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace autochar
