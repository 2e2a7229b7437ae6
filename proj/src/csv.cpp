#include "mufide/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mufide/errors.hpp"

namespace mufide::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& path, int line_no, int col, const std::string& raw) {
  const std::string cell = trim(raw);
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(path + ":" + std::to_string(line_no) + ": column " +
                      std::to_string(col) + ": " + why + " '" + raw + "'");
  };
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw fail("cannot parse");
  if (!std::isfinite(value)) throw fail("non-finite value");
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code drop;
    fs::remove(tmp, drop);
    throw DataError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

Table read_csv(const std::string& path) {
  const std::string text = read_text_file(path);

  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(path + ": empty file, expected a header row");

  Table t;
  for (const std::string& cell : split_line(lines[0])) {
    const std::string name = trim(cell);
    if (name.empty())
      throw ParseError(path + ":1: empty header cell");
    t.header.push_back(name);
  }

  const int cols = static_cast<int>(t.header.size());
  const int rows = static_cast<int>(lines.size()) - 1;
  t.values.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int line_no = r + 2;  // 1-based, after the header
    const std::vector<std::string> cells = split_line(lines[r + 1]);
    if (static_cast<int>(cells.size()) != cols)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " columns, got " +
                       std::to_string(cells.size()));
    for (int c = 0; c < cols; ++c)
      t.values(r, c) = parse_cell(path, line_no, c + 1, cells[c]);
  }
  return t;
}

std::pair<Matrix, Vector> read_xy_csv(const std::string& path) {
  const Table t = read_csv(path);
  if (t.header.size() < 2)
    throw ParseError(path + ": expected at least one input column and a final 'y' column");
  if (t.header.back() != "y")
    throw ParseError(path + ": last column must be named 'y', got '" + t.header.back() +
                     "'");
  const int d = static_cast<int>(t.header.size()) - 1;
  return {t.values.leftCols(d), t.values.col(d)};
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  if (static_cast<int>(header.size()) != values.cols() && values.rows() > 0)
    throw DimensionMismatch("write_csv: header has " + std::to_string(header.size()) +
                            " names for " + std::to_string(values.cols()) + " columns");
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

void write_xy_csv(const std::string& path, const Matrix& x, const Vector& y) {
  if (x.rows() != y.size())
    throw DimensionMismatch("write_xy_csv: row count mismatch");
  std::vector<std::string> header;
  for (int c = 0; c < x.cols(); ++c) header.push_back("x" + std::to_string(c + 1));
  header.push_back("y");
  Matrix m(x.rows(), x.cols() + 1);
  m.leftCols(x.cols()) = x;
  m.col(x.cols()) = y;
  write_csv(path, header, m);
}

}  // namespace mufide::csv
