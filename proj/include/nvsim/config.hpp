#pragma once

// Flat `key = value` run configuration. Every key has a documented default;
// unknown keys are rejected.

#include <string>
#include <string_view>
#include <vector>

#include "nvsim/execution.hpp"
#include "nvsim/model.hpp"
#include "nvsim/motional_esr.hpp"
#include "nvsim/photodynamics.hpp"

namespace nvsim {

struct Config {
  FineStructureParams fine;
  RateParams rates;
  TemperatureMap temperature_map;
  double esr_linewidth = kDefaultEsrLinewidth;

  double sweep_min = 0.0;  // GHz
  double sweep_max = 20.0;
  int sweep_points = 801;
  double crossing_gap_threshold = 0.5;  // GHz

  double strain = 3.0;  // delta_perp for lines, excitation and rabi
  double odmr_strain = kDefaultOdmrStrain;

  double detuning_min = -10.0;
  double detuning_max = 10.0;
  int detuning_points = 2001;

  double rabi_omega = 0.12566370614359174;  // 1/ns, 50 ns period
  double rabi_tau_max = 200.0;              // ns
  int rabi_points = 201;

  double odmr_freq_min = 0.0;  // GHz
  double odmr_freq_max = 4.0;
  int odmr_freq_points = 801;
  double odmr_temperature = 300.0;  // K
  double temperature_min = 4.0;
  double temperature_max = 300.0;
  int temperature_points = 149;

  double avg_max_strain = 30.0;
  int avg_points = 301;

  bool fit_free_lambda_perp = false;
  double fit_strain_max = 40.0;
  int fit_max_iterations = 3000;

  std::string output_dir = "nvsim_out";
  Execution execution = Execution::parallel;

  // Throws InputError naming the offending key.
  void validate() const;
};

// `source` names the text in error messages (file path or "<string>").
Config parse_config(std::string_view text, std::string_view source = "<string>");
Config load_config(const std::string& path);

// Every key, one per line, doubles with 17 significant digits; parsing the
// dump reproduces the configuration exactly.
std::string dump_config(const Config& c);

std::vector<std::string> config_keys();

}  // namespace nvsim
