#pragma once

#include <Eigen/Core>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pimfit/dataset.hpp"
#include "pimfit/errors.hpp"

namespace pimfit {

namespace detail {

// RFC-4180 records: quoted fields may hold commas, doubled quotes and line
// breaks; accepts both LF and CRLF endings.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
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
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field at end of file");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

inline bool is_missing_token(const std::string& s) {
  if (s.empty()) return true;
  std::string t;
  for (char c : s) {
    if (c != ' ' && c != '\t') t.push_back(c);
  }
  if (t.empty()) return true;
  for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return t == "na" || t == "nan" || t == "null";
}

// Locale-independent numeric parse (dot decimal only).
inline bool parse_number(const std::string& s, double& out) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
  if (a < b && s[a] == '+') ++a;  // from_chars takes no leading plus
  if (a == b) return false;
  const auto [ptr, ec] = std::from_chars(s.data() + a, s.data() + b, out);
  return ec == std::errc() && ptr == s.data() + b;
}

}  // namespace detail

struct CsvLoadInfo {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;  // incomplete cases among selected columns
};

// Loads the response plus the named covariate columns from a headered CSV.
// Rows with a missing cell (empty, NA, NaN, null) in any selected column are
// dropped as incomplete cases; any other unparseable cell is an error naming
// the row and column.
inline Dataset load_csv(const std::string& path, const std::string& response,
                        const std::vector<std::string>& columns,
                        CsvLoadInfo* info = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  const auto records = detail::parse_csv(in);
  if (records.empty()) throw DataError("'" + path + "' is empty (no header row)");

  const std::vector<std::string>& header = records.front();
  auto find_column = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw DataError("column '" + name + "' not found in '" + path + "'");
  };
  std::vector<std::size_t> selected;
  selected.push_back(find_column(response));
  for (const auto& name : columns) selected.push_back(find_column(name));

  std::vector<double> ybuf;
  std::vector<double> xbuf;  // row-major staging
  std::size_t dropped = 0;
  std::vector<double> row_values(selected.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& record = records[r];
    bool missing = false;
    for (std::size_t c = 0; c < selected.size(); ++c) {
      const std::size_t col = selected[c];
      if (col >= record.size() || detail::is_missing_token(record[col])) {
        missing = true;
        break;
      }
      if (!detail::parse_number(record[col], row_values[c])) {
        const std::string& name = c == 0 ? response : columns[c - 1];
        throw DataError("'" + path + "' row " + std::to_string(r + 1) +
                        ", column '" + name + "': cannot parse '" +
                        record[col] + "' as a number");
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    ybuf.push_back(row_values[0]);
    for (std::size_t c = 1; c < selected.size(); ++c)
      xbuf.push_back(row_values[c]);
  }
  if (ybuf.empty()) throw DataError("'" + path + "' has zero usable rows");

  Dataset data;
  data.column_names = columns;
  const auto n = static_cast<Eigen::Index>(ybuf.size());
  const auto d = static_cast<Eigen::Index>(columns.size());
  data.y = Eigen::Map<Eigen::VectorXd>(ybuf.data(), n);
  data.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) data.x(i, j) = xbuf[static_cast<std::size_t>(i * d + j)];
  if (info) {
    info->rows_read = records.size() - 1;
    info->rows_dropped = dropped;
  }
  data.validate();
  return data;
}

}  // namespace pimfit
