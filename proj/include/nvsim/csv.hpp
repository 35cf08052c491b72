#pragma once

// CSV emission with fixed 9-significant-digit numbers, and the fit input
// reader (columns defect_id, line_ghz[, sigma_ghz]).

#include <string>
#include <variant>
#include <vector>

#include "nvsim/fitting.hpp"

namespace nvsim {

using CsvCell = std::variant<double, std::string>;

// "{:#.9g}": 1.42 -> "1.42000000"; independent of the C locale.
std::string format_number(double v);

// Header line first, '\n' line endings. Rows must match the header width.
// Filesystem errors are raised as InputError carrying the OS message.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<CsvCell>>& rows);

// Defects in order of first appearance. Errors report the 1-based line number.
std::vector<ObservedDefect> read_fit_csv(const std::string& path);
std::vector<ObservedDefect> parse_fit_csv(const std::string& text, const std::string& source = "<string>");

}  // namespace nvsim
