#include "transfeat/csv.hpp"

#include "transfeat/error.hpp"

namespace transfeat {

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  while (true) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  record_line_ = line_;

  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (!in_quotes) break;
      // Quoted field spans a line break.
      if (!std::getline(in_, line)) {
        throw ParseError(record_line_, "unterminated quoted field");
      }
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      field.push_back('\n');
      i = 0;
      continue;
    }
    char ch = line[i++];
    if (in_quotes) {
      if (ch == '"') {
        if (i < line.size() && line[i] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (ch == '"') {
      if (!field.empty() || was_quoted) {
        throw ParseError(record_line_, "unexpected quote inside field");
      }
      in_quotes = true;
      was_quoted = true;
    } else {
      if (was_quoted) {
        throw ParseError(record_line_, "characters after closing quote");
      }
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return true;
}

void write_csv_field(std::ostream& out, std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char ch : field) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

}  // namespace transfeat
