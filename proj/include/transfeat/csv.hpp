#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace transfeat {

// RFC-4180 record reader. Quoted fields may contain separators, doubled
// quotes and line breaks. Blank lines are skipped; CRLF is accepted.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Returns false at end of input. Throws ParseError on malformed quoting.
  bool next(std::vector<std::string>& fields);

  // 1-based physical line on which the last returned record starts.
  std::size_t record_line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

// Quotes the field only when it contains ',', '"', CR or LF.
void write_csv_field(std::ostream& out, std::string_view field);

}  // namespace transfeat
