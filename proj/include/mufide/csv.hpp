#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mufide/linalg.hpp"

namespace mufide::csv {

// Decimal text with enough digits for an exact 64-bit round-trip.
std::string format_double(double v);

// Reads the whole file; errors: DataError when it cannot be opened.
std::string read_text_file(const std::string& path);

// Writes content to a sibling temp file and renames it over path, so readers
// never observe a half-written file.
void write_text_atomic(const std::string& path, const std::string& content);

struct Table {
  std::vector<std::string> header;
  Matrix values;  // rows x header.size(); zero rows is a valid table
};

// Strict numeric CSV: one header row, comma separators, every cell a finite
// decimal. errors: ParseError naming file, row and column.
Table read_csv(const std::string& path);

// Dataset file: input columns followed by a final column named "y".
std::pair<Matrix, Vector> read_xy_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);
// Writes the standard dataset header x1..xd, y.
void write_xy_csv(const std::string& path, const Matrix& x, const Vector& y);

}  // namespace mufide::csv
