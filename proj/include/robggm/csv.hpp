#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "scatter.hpp"

namespace robggm {

namespace detail {

inline std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

// Lines of the file with trailing carriage returns removed; a single
// trailing newline does not produce a phantom empty line.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::user, "file_not_found",
                "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();
  std::vector<std::string> lines;
  std::string cur;
  for (char c : content) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline double parse_cell(const std::string& raw, long row, long col) {
  const std::string cell = strip_quotes(raw);
  // Trim ASCII whitespace around the number.
  size_t b = cell.find_first_not_of(" \t");
  size_t e = cell.find_last_not_of(" \t");
  if (b == std::string::npos)
    throw NonNumericCell("empty cell at row " + std::to_string(row) +
                         ", column " + std::to_string(col), row, col);
  const char* first = cell.data() + b;
  const char* last = cell.data() + e + 1;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    throw NonNumericCell("cell '" + cell + "' at row " + std::to_string(row) +
                         ", column " + std::to_string(col) +
                         " is not a finite number", row, col);
  return value;
}

}  // namespace detail

// Resolve a data file path: absolute paths and paths that exist as given
// are used directly; otherwise ROBGGM_DATA_DIR, when set, is tried as a
// base directory.
inline std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty()) return path;
  if (fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* base = std::getenv("ROBGGM_DATA_DIR")) {
    fs::path candidate = fs::path(base) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

// Numeric CSV with a mandatory header line naming the columns. Cells may
// be double-quoted (as R's write.csv emits). Row and column coordinates
// in errors are 1-based; the header counts as line 1.
inline DataMatrix ingest_csv(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw EmptyFile("no content in " + path);

  std::vector<std::string> names;
  for (const auto& cell : detail::split_csv_line(lines[0]))
    names.push_back(detail::strip_quotes(cell));
  const size_t p = names.size();

  if (lines.size() < 2) throw EmptyFile("no data rows in " + path);
  const size_t n = lines.size() - 1;
  Matrix values(n, p);
  for (size_t r = 0; r < n; ++r) {
    const long file_line = static_cast<long>(r) + 2;
    const auto cells = detail::split_csv_line(lines[r + 1]);
    if (cells.size() != p)
      throw RaggedRows("row at line " + std::to_string(file_line) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(p), file_line);
    for (size_t c = 0; c < p; ++c)
      values(r, c) = detail::parse_cell(cells[c], file_line,
                                        static_cast<long>(c) + 1);
  }
  return DataMatrix(std::move(values), std::move(names));
}

// Adjacency matrix CSV: square 0/1 matrix with a header of vertex labels,
// optionally preceded by a row-label column (again the write.csv layout).
// When expected_labels is non-empty the file's labels must be a
// permutation of it and the matrix is reordered to that order.
inline Graph ingest_adjacency(const std::string& path,
                              const std::vector<std::string>& expected_labels = {}) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw EmptyFile("no content in " + path);

  std::vector<std::string> header;
  for (const auto& cell : detail::split_csv_line(lines[0]))
    header.push_back(detail::strip_quotes(cell));
  if (lines.size() < 2) throw EmptyFile("no matrix rows in " + path);

  const size_t n_rows = lines.size() - 1;
  std::vector<std::vector<std::string>> rows;
  rows.reserve(n_rows);
  for (size_t r = 0; r < n_rows; ++r)
    rows.push_back(detail::split_csv_line(lines[r + 1]));

  // A row-label column shows up as one more cell per data row than labels
  // in the header would explain, or as an empty leading header cell.
  bool label_column = false;
  if (!header.empty() && header.front().empty()) {
    label_column = true;
    header.erase(header.begin());
  } else if (!rows.empty() && rows[0].size() == header.size() + 1) {
    label_column = true;
  }

  const size_t p = header.size();
  if (n_rows != p)
    throw DimensionMismatch("adjacency in " + path + " has " +
                            std::to_string(n_rows) + " rows for " +
                            std::to_string(p) + " labelled columns");

  Eigen::MatrixXi m(p, p);
  for (size_t r = 0; r < n_rows; ++r) {
    const long file_line = static_cast<long>(r) + 2;
    auto cells = rows[r];
    if (label_column) {
      if (cells.size() != p + 1)
        throw RaggedRows("row at line " + std::to_string(file_line) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(p + 1), file_line);
      const std::string row_label = detail::strip_quotes(cells.front());
      if (row_label != header[r])
        throw LabelMismatch("row label '" + row_label + "' at line " +
                            std::to_string(file_line) +
                            " does not match column label '" + header[r] + "'");
      cells.erase(cells.begin());
    } else if (cells.size() != p) {
      throw RaggedRows("row at line " + std::to_string(file_line) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(p), file_line);
    }
    for (size_t c = 0; c < p; ++c) {
      const double v = detail::parse_cell(cells[c], file_line,
                                          static_cast<long>(c) + 1);
      if (v != 0.0 && v != 1.0)
        throw NonBinaryEntry("adjacency cell at line " +
                             std::to_string(file_line) + ", column " +
                             std::to_string(c + 1) + " is " +
                             std::to_string(v) + ", expected 0 or 1");
      m(r, c) = static_cast<int>(v);
    }
  }

  if (expected_labels.empty()) return parse_adjacency(m, header);

  if (expected_labels.size() != p)
    throw LabelMismatch("adjacency in " + path + " has " + std::to_string(p) +
                        " vertices, expected " +
                        std::to_string(expected_labels.size()));
  std::vector<int> perm(p);  // perm[i]: position in the file of label i
  for (size_t i = 0; i < p; ++i) {
    auto it = std::find(header.begin(), header.end(), expected_labels[i]);
    if (it == header.end())
      throw LabelMismatch("adjacency in " + path + " is missing label '" +
                          expected_labels[i] + "'");
    perm[i] = static_cast<int>(it - header.begin());
  }
  std::vector<int> seen(p, 0);
  for (int idx : perm)
    if (seen[idx]++)
      throw LabelMismatch("adjacency in " + path + " has duplicated labels");

  Eigen::MatrixXi reordered(p, p);
  for (size_t i = 0; i < p; ++i)
    for (size_t j = 0; j < p; ++j) reordered(i, j) = m(perm[i], perm[j]);
  return parse_adjacency(reordered, expected_labels);
}

}  // namespace robggm
