#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kcs/dataset.hpp"

namespace kcs::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws kcs::Error when absent.
  std::size_t column(std::string_view name) const;
};

// Minimal RFC 4180 reader: comma separated, optional double quotes.
Table read(std::istream& in);
Table read_file(const std::string& path);

// Locale-independent shortest round-trip formatting.
std::string format_double(double v);
// Locale-independent parse of the whole field; throws kcs::Error.
double parse_double(std::string_view field);

// Covariates with header x0..x{d-1} plus a `y` column when y is given.
void write_points(std::ostream& out, const Points& x, const Vector* y);
void write_points_file(const std::string& path, const Points& x, const Vector* y);

// Reads the numeric columns named x0.. (or all columns except `y` when no
// x-prefixed columns exist) and the optional `y` column.
struct PointsWithResponse {
  Points x;
  std::optional<Vector> y;
};
PointsWithResponse read_points_file(const std::string& path);

}  // namespace kcs::csv
