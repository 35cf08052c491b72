#include "nvsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {

struct Key {
  std::string name;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view)> set;
};

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw InputError(fmt::format("config key '{}': '{}' is not a number", key, v));
  return out;
}

int parse_int(std::string_view key, std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw InputError(fmt::format("config key '{}': '{}' is not an integer", key, v));
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError(fmt::format("config key '{}': '{}' is not true/false", key, v));
}

std::string show(double v) { return fmt::format("{:.17g}", v); }

template <class Member>
Key real(std::string name, Member member) {
  return {name, [member](const Config& c) { return show(member(const_cast<Config&>(c))); },
          [member, name](Config& c, std::string_view v) { member(c) = parse_double(name, v); }};
}

template <class Member>
Key integer(std::string name, Member member) {
  return {name, [member](const Config& c) { return std::to_string(member(const_cast<Config&>(c))); },
          [member, name](Config& c, std::string_view v) { member(c) = parse_int(name, v); }};
}

#define NVSIM_REAL(key, expr) real(key, [](Config& c) -> double& { return expr; })
#define NVSIM_INT(key, expr) integer(key, [](Config& c) -> int& { return expr; })

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k = {
        NVSIM_REAL("lambda_z", c.fine.lambda_z),
        NVSIM_REAL("lambda_perp", c.fine.lambda_perp),
        NVSIM_REAL("d_es", c.fine.d_es),
        NVSIM_REAL("delta_cap", c.fine.delta_cap),
        NVSIM_REAL("d_gs", c.fine.d_gs),
        NVSIM_REAL("e_es_coeff", c.fine.e_es_coeff),
        NVSIM_REAL("delta_z", c.fine.delta_z),
        NVSIM_REAL("zpl_offset", c.fine.zpl_offset),
        NVSIM_REAL("gamma_rad", c.rates.gamma_rad),
        NVSIM_REAL("k_isc_xy", c.rates.k_isc_xy),
        NVSIM_REAL("k_isc_z", c.rates.k_isc_z),
        NVSIM_REAL("gamma_singlet", c.rates.gamma_singlet),
        NVSIM_REAL("beta_z", c.rates.beta_z),
        NVSIM_REAL("pump_green", c.rates.pump_green),
        NVSIM_REAL("pump_res_max", c.rates.pump_res_max),
        NVSIM_REAL("linewidth", c.rates.linewidth),
        NVSIM_REAL("mw_mix_rate", c.rates.mw_mix_rate),
        NVSIM_REAL("r0", c.temperature_map.r0),
        NVSIM_REAL("ea_mev", c.temperature_map.ea),
        NVSIM_REAL("esr_linewidth", c.esr_linewidth),
        NVSIM_REAL("sweep_min", c.sweep_min),
        NVSIM_REAL("sweep_max", c.sweep_max),
        NVSIM_INT("sweep_points", c.sweep_points),
        NVSIM_REAL("crossing_gap_threshold", c.crossing_gap_threshold),
        NVSIM_REAL("strain", c.strain),
        NVSIM_REAL("odmr_strain", c.odmr_strain),
        NVSIM_REAL("detuning_min", c.detuning_min),
        NVSIM_REAL("detuning_max", c.detuning_max),
        NVSIM_INT("detuning_points", c.detuning_points),
        NVSIM_REAL("rabi_omega", c.rabi_omega),
        NVSIM_REAL("rabi_tau_max", c.rabi_tau_max),
        NVSIM_INT("rabi_points", c.rabi_points),
        NVSIM_REAL("odmr_freq_min", c.odmr_freq_min),
        NVSIM_REAL("odmr_freq_max", c.odmr_freq_max),
        NVSIM_INT("odmr_freq_points", c.odmr_freq_points),
        NVSIM_REAL("odmr_temperature", c.odmr_temperature),
        NVSIM_REAL("temperature_min", c.temperature_min),
        NVSIM_REAL("temperature_max", c.temperature_max),
        NVSIM_INT("temperature_points", c.temperature_points),
        NVSIM_REAL("avg_max_strain", c.avg_max_strain),
        NVSIM_INT("avg_points", c.avg_points),
        NVSIM_REAL("fit_strain_max", c.fit_strain_max),
        NVSIM_INT("fit_max_iterations", c.fit_max_iterations),
    };
    k.push_back({"fit_free_lambda_perp", [](const Config& c) { return std::string(c.fit_free_lambda_perp ? "true" : "false"); },
                 [](Config& c, std::string_view v) { c.fit_free_lambda_perp = parse_bool("fit_free_lambda_perp", v); }});
    k.push_back({"output_dir", [](const Config& c) { return c.output_dir; },
                 [](Config& c, std::string_view v) {
                   if (v.empty()) throw InputError("config key 'output_dir': empty path");
                   c.output_dir = std::string(v);
                 }});
    k.push_back({"execution", [](const Config& c) { return std::string(c.execution == Execution::serial ? "serial" : "parallel"); },
                 [](Config& c, std::string_view v) {
                   if (v == "serial") c.execution = Execution::serial;
                   else if (v == "parallel") c.execution = Execution::parallel;
                   else throw InputError(fmt::format("config key 'execution': '{}' is not serial/parallel", v));
                 }});
    return k;
  }();
  return keys;
}

#undef NVSIM_REAL
#undef NVSIM_INT

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void require(bool ok, std::string_view key, std::string_view what) {
  if (!ok) throw InputError(fmt::format("config key '{}': {}", key, what));
}

}  // namespace

void Config::validate() const {
  fine.validate();
  rates.validate();
  temperature_map.validate();
  require(esr_linewidth > 0.0, "esr_linewidth", "must be > 0");
  require(sweep_min >= 0.0 && sweep_max > sweep_min, "sweep_max", "need 0 <= sweep_min < sweep_max");
  require(sweep_points >= 2, "sweep_points", "must be >= 2");
  require(crossing_gap_threshold > 0.0, "crossing_gap_threshold", "must be > 0");
  require(strain >= 0.0 && std::isfinite(strain), "strain", "must be >= 0");
  require(odmr_strain >= 0.0 && std::isfinite(odmr_strain), "odmr_strain", "must be >= 0");
  require(detuning_max > detuning_min, "detuning_max", "must exceed detuning_min");
  require(detuning_points >= 3, "detuning_points", "must be >= 3");
  require(rabi_omega > 0.0, "rabi_omega", "must be > 0");
  require(rabi_tau_max > 0.0, "rabi_tau_max", "must be > 0");
  require(rabi_points >= 6, "rabi_points", "must be >= 6");
  require(odmr_freq_max > odmr_freq_min, "odmr_freq_max", "must exceed odmr_freq_min");
  require(odmr_freq_points >= 2, "odmr_freq_points", "must be >= 2");
  require(odmr_temperature > 0.0, "odmr_temperature", "must be > 0");
  require(temperature_min > 0.0 && temperature_max > temperature_min, "temperature_max",
          "need 0 < temperature_min < temperature_max");
  require(temperature_points >= 2, "temperature_points", "must be >= 2");
  require(avg_max_strain > 0.0, "avg_max_strain", "must be > 0");
  require(avg_points >= 2, "avg_points", "must be >= 2");
  require(fit_strain_max > 0.0, "fit_strain_max", "must be > 0");
  require(fit_max_iterations > 0, "fit_max_iterations", "must be > 0");
}

Config parse_config(std::string_view text, std::string_view source) {
  Config c;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError(fmt::format("{}:{}: expected 'key = value', got '{}'", source, line_no, line));
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& keys = registry();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
    if (it == keys.end()) throw InputError(fmt::format("{}:{}: unknown config key '{}'", source, line_no, key));
    if (!seen.insert(std::string(key)).second)
      throw InputError(fmt::format("{}:{}: duplicate config key '{}'", source, line_no, key));
    try {
      it->set(c, value);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open config file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const Config& c) {
  std::string out;
  for (const Key& k : registry()) out += fmt::format("{} = {}\n", k.name, k.get(c));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const Key& k : registry()) names.push_back(k.name);
  return names;
}

}  // namespace nvsim
