#include "nvsim/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {

std::string render(const CsvCell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_number(*d);
  return std::get<std::string>(c);
}

void emit(const std::string& path, const std::vector<std::string>& header, std::size_t n_rows,
          const auto& row_text) {
  std::string body;
  for (std::size_t k = 0; k < header.size(); ++k) body += (k ? "," : "") + header[k];
  body += '\n';
  for (std::size_t r = 0; r < n_rows; ++r) body += row_text(r) + '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}': {}", path, std::strerror(errno)));
  out << body;
  out.close();
  if (!out) throw InputError(fmt::format("error writing '{}': {}", path, std::strerror(errno)));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  return fmt::format("{:#.9g}", v);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (const auto& r : rows)
    if (r.size() != header.size()) throw InputError(fmt::format("write_csv '{}': ragged row", path));
  emit(path, header, rows.size(), [&](std::size_t r) {
    std::string line;
    for (std::size_t k = 0; k < rows[r].size(); ++k) line += (k ? "," : "") + format_number(rows[r][k]);
    return line;
  });
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<CsvCell>>& rows) {
  for (const auto& r : rows)
    if (r.size() != header.size()) throw InputError(fmt::format("write_csv '{}': ragged row", path));
  emit(path, header, rows.size(), [&](std::size_t r) {
    std::string line;
    for (std::size_t k = 0; k < rows[r].size(); ++k) line += (k ? "," : "") + render(rows[r][k]);
    return line;
  });
}

std::vector<ObservedDefect> parse_fit_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false, have_sigma = false;
  std::vector<ObservedDefect> defects;
  auto fail = [&](const std::string& what) {
    throw InputError(fmt::format("{}:{}: {}", source, line_no, what));
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto cells = split(line);
    if (!have_header) {
      if (cells.size() < 2 || cells[0] != "defect_id" || cells[1] != "line_ghz" ||
          (cells.size() == 3 && cells[2] != "sigma_ghz") || cells.size() > 3)
        fail("expected header 'defect_id,line_ghz[,sigma_ghz]'");
      have_sigma = cells.size() == 3;
      have_header = true;
      continue;
    }
    if (cells.size() != (have_sigma ? 3u : 2u)) fail(fmt::format("expected {} columns", have_sigma ? 3 : 2));
    if (cells[0].empty()) fail("empty defect_id");
    auto number = [&](const std::string& s, const char* col) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
        fail(fmt::format("{} '{}' is not a finite number", col, s));
      return v;
    };
    const double value = number(cells[1], "line_ghz");
    auto it = std::find_if(defects.begin(), defects.end(), [&](const auto& d) { return d.id == cells[0]; });
    if (it == defects.end()) {
      defects.push_back(ObservedDefect{cells[0], {}, 0.01});
      it = defects.end() - 1;
    }
    it->lines.push_back(value);
    if (have_sigma) {
      const double s = number(cells[2], "sigma_ghz");
      if (!(s > 0.0)) fail("sigma_ghz must be > 0");
      it->sigma = s;
    }
  }
  if (!have_header) throw InputError(fmt::format("{}: empty input, expected a header line", source));
  if (defects.empty()) throw InputError(fmt::format("{}: no data rows", source));
  for (const auto& d : defects) {
    try {
      d.validate();
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: {}", source, e.what()));
    }
  }
  return defects;
}

std::vector<ObservedDefect> read_fit_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}': {}", path, std::strerror(errno)));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_fit_csv(ss.str(), path);
}

}  // namespace nvsim
