#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fmcal/pgps.hpp"

namespace fmcal {

// Shortest round-trip decimal form of a double, locale-independent.
std::string format_double(double v);

// Writes "t,mid_price" rows, t starting at 1. Mid-prices are integer or
// half-integer ticks, so exactly one fractional digit (0 or 5) reproduces
// them losslessly. Throws if a value is not a half-integer.
void write_series_csv(std::span<const double> values, std::ostream& out);
void write_series_csv_file(std::span<const double> values, const std::string& path);

// Reads a two-column series CSV. A leading "t,mid_price" header is optional.
// Malformed rows and non-positive prices raise std::runtime_error naming the
// line number. Returns the mid-price column.
std::vector<double> read_series_csv(std::istream& in, const std::string& name = "<stream>");
std::vector<double> read_series_csv_file(const std::string& path);

// Rescales currency prices into tick units: v -> round(2 v / tick) / 2,
// keeping half-tick resolution. pre: tick_size > 0.
std::vector<double> convert_to_ticks(std::span<const double> values, double tick_size);

}  // namespace fmcal
