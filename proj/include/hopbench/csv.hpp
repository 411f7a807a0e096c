#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hopbench::csv {

using Record = std::vector<std::string>;

// Reads delimiter-separated records with RFC 4180 quoting. Blank lines are
// skipped. Throws std::runtime_error on an unterminated quoted field.
inline std::vector<Record> read(std::istream& in, char delimiter = ',') {
  std::vector<Record> rows;
  Record row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    if (row.empty() && !field_started && field.empty()) return;  // blank line
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      field_started = true;
      end_field();
      field_started = true;
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      // tolerated before '\n'
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !row.empty() || !field.empty()) end_row();
  return rows;
}

inline std::string quote(const std::string& field, char delimiter = ',') {
  const bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const Record& row, char delimiter = ',') {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << delimiter;
    out << quote(row[i], delimiter);
  }
  out << '\n';
}

}  // namespace hopbench::csv
