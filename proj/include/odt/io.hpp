#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace odt {

// Whole-file helpers; failures throw Error(kIo).
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line
// endings, embedded newlines inside quotes.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next record into `fields`. Returns false at end of input.
  bool next(std::vector<std::string>& fields);
  // 1-based line number where the last returned record started.
  size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  size_t line_ = 1;
  size_t record_line_ = 0;
};

// Quotes a field when it contains a comma, quote, or newline.
void append_csv_field(std::string& out, std::string_view field);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace odt
