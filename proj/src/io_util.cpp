#include "streamal/io_util.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace streamal {

std::vector<CsvRecord> parse_csv(std::string_view content) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = content.size();

  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false;
    bool record_done = false;

    while (i < n && !record_done) {
      const char c = content[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && content[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
      } else {
        switch (c) {
          case '"':
            in_quotes = true;
            ++i;
            break;
          case ',':
            rec.fields.push_back(std::move(field));
            field.clear();
            ++i;
            break;
          case '\r':
            ++i;
            break;
          case '\n':
            ++line;
            ++i;
            record_done = true;
            break;
          default:
            field.push_back(c);
            ++i;
        }
      }
    }
    if (in_quotes) {
      throw std::runtime_error("unterminated quote in CSV record starting at line " +
                               std::to_string(rec.line));
    }
    rec.fields.push_back(std::move(field));
    if (!(rec.fields.size() == 1 && rec.fields[0].empty())) {
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) {
    throw std::runtime_error("double formatting failed");
  }
  return std::string(buf, ptr);
}

}  // namespace streamal
