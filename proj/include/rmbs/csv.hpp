#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "rmbs/error.hpp"

namespace rmbs::csv {

using Row = std::vector<std::string>;

/// Splits one RFC 4180 record (quoted fields, doubled quotes; no embedded newlines).
inline Row split_line(const std::string& line) {
  Row row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  row.push_back(std::move(field));
  return row;
}

/// Reads every non-empty line; strips a trailing '\r'.
inline std::vector<Row> read(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_line(line));
  }
  return rows;
}

inline std::vector<Row> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read(in);
}

/// Header-indexed view used by the file readers.
class Table {
 public:
  explicit Table(std::vector<Row> rows, const std::string& source = "csv") : source_(source) {
    if (rows.empty()) throw InvalidInput(source + ": missing header row");
    header_ = std::move(rows.front());
    rows.erase(rows.begin());
    rows_ = std::move(rows);
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw InvalidInput(source_ + ": missing column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& h : header_)
      if (h == name) return true;
    return false;
  }

  const Row& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }

  const std::string& cell(std::size_t row, std::size_t col) const {
    const Row& r = rows_.at(row);
    if (col >= r.size())
      throw InvalidInput(source_ + ": row " + std::to_string(row + 2) + " is too short");
    return r[col];
  }

 private:
  std::string source_;
  Row header_;
  std::vector<Row> rows_;
};

inline std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << quote(row[i]);
  }
  out << '\n';
}

/// Text that parses back to the same double.
inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("cannot parse " + what + " from '" + s + "'");
  }
}

inline long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("cannot parse " + what + " from '" + s + "'");
  }
}

inline bool parse_flag(const std::string& s, const std::string& what) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no" || s.empty()) return false;
  throw InvalidInput("cannot parse " + what + " flag from '" + s + "'");
}

}  // namespace rmbs::csv
