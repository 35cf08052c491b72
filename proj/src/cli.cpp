#include "nvsim/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <optional>

#include "nvsim/config.hpp"
#include "nvsim/csv.hpp"
#include "nvsim/error.hpp"
#include "nvsim/fitting.hpp"
#include "nvsim/manifest.hpp"
#include "nvsim/motional_esr.hpp"
#include "nvsim/photodynamics.hpp"
#include "nvsim/sweep.hpp"

namespace nvsim {

namespace {

namespace fs = std::filesystem;

struct StrainArgs {
  std::optional<double> ghz;
  std::optional<double> gpa;
  double y = 0.0;

  void attach(CLI::App* sub) {
    auto* g = sub->add_option("--strain", ghz, "transverse strain delta_perp along x (GHz)");
    auto* p = sub->add_option("--strain-gpa", gpa, "transverse stress (GPa), converted at 1e3 GHz/GPa");
    g->excludes(p);
    sub->add_option("--strain-y", y, "additional strain component along y (GHz)");
  }

  StrainVector resolve(double fallback) const {
    double x = fallback;
    if (ghz) x = *ghz;
    if (gpa) x = *gpa * kGhzPerGpa;
    if (!std::isfinite(x) || !std::isfinite(y)) throw InputError("--strain: value must be finite");
    return StrainVector{x, y};
  }
};

std::string spin_name(Spin s) {
  switch (s) {
    case Spin::sx: return "gSx";
    case Spin::sy: return "gSy";
    case Spin::sz: return "gSz";
  }
  return "?";
}

class Session {
 public:
  Session(Config cfg, std::string command, std::ostream& out)
      : cfg_(std::move(cfg)), out_(out) {
    manifest_.command = std::move(command);
    manifest_.config = dump_config(cfg_);
    std::error_code ec;
    fs::create_directories(cfg_.output_dir, ec);
    if (ec) throw InputError(fmt::format("output_dir '{}': {}", cfg_.output_dir, ec.message()));
  }

  const Config& cfg() const { return cfg_; }
  std::ostream& out() { return out_; }

  void add_input(const std::string& path) { manifest_.inputs.emplace_back(path, sha256_file(path)); }

  std::string path(const std::string& name) const { return (fs::path(cfg_.output_dir) / name).string(); }

  template <class Rows>
  void csv(const std::string& name, const std::vector<std::string>& header, const Rows& rows) {
    const std::string p = path(name);
    write_csv(p, header, rows);
    record(p);
  }

  void text(const std::string& name, const std::string& body) {
    const std::string p = path(name);
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << body;
    if (!f) throw InputError(fmt::format("cannot write '{}'", p));
    f.close();
    record(p);
  }

  void finish(const std::string& stem) {
    const std::string p = path(stem + "_manifest.json");
    write_manifest(p, manifest_);
    fmt::print(out_, "manifest: {}\n", p);
  }

 private:
  void record(const std::string& p) {
    manifest_.outputs.emplace_back(p, sha256_file(p));
    fmt::print(out_, "wrote {}\n", p);
  }

  Config cfg_;
  std::ostream& out_;
  RunManifest manifest_;
};

void cmd_levels(Session& s) {
  const auto levels = zero_strain_levels(s.cfg().fine);
  fmt::print(s.out(), "{:>5}  {:>14}  {}\n", "level", "energy_ghz", "symmetry");
  std::vector<std::vector<CsvCell>> rows;
  double a1 = 0.0, a2 = 0.0, e_mean = 0.0, ep_mean = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto& l = levels[k];
    fmt::print(s.out(), "{:>5}  {:>14}  {}\n", k + 1, format_number(l.energy), to_string(l.label));
    rows.push_back({static_cast<double>(k + 1), l.energy, std::string(to_string(l.label))});
    switch (l.label) {
      case Symmetry::a1: a1 = l.energy; break;
      case Symmetry::a2: a2 = l.energy; break;
      case Symmetry::e1:
      case Symmetry::e2: e_mean += 0.5 * l.energy; break;
      default: ep_mean += 0.5 * l.energy; break;
    }
  }
  const GroundLevels g = ground_levels(s.cfg().fine);
  fmt::print(s.out(), "A2 - A1 = {:.2f} GHz\n", a2 - a1);
  fmt::print(s.out(), "E' - E = {:.2f} GHz\n", ep_mean - e_mean);
  fmt::print(s.out(), "ground: gSz {} gSx {} gSy {} GHz\n", format_number(g.sz), format_number(g.sx),
             format_number(g.sy));
  s.csv("levels.csv", {"level", "energy_ghz", "symmetry"}, rows);
}

void cmd_sweep(Session& s) {
  const Config& c = s.cfg();
  const auto grid = linear_grid(c.sweep_min, c.sweep_max, static_cast<std::size_t>(c.sweep_points));
  const SweepResult sr = sweep(c.fine, grid, c.execution);
  std::vector<std::string> header{"delta_perp_ghz"};
  for (int t = 1; t <= 6; ++t) header.push_back(fmt::format("e{}", t));
  for (int t = 1; t <= 6; ++t) header.push_back(fmt::format("p_sz_{}", t));
  for (int t = 1; t <= 6; ++t) header.push_back(fmt::format("p_branch_x_{}", t));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> r{grid[i]};
    for (std::size_t t = 0; t < 6; ++t) r.push_back(sr.tracks[t][i].energy);
    for (std::size_t t = 0; t < 6; ++t) r.push_back(sr.tracks[t][i].character.p_sz);
    for (std::size_t t = 0; t < 6; ++t) r.push_back(sr.tracks[t][i].character.p_branch_x);
    rows.push_back(std::move(r));
  }
  s.csv("sweep.csv", header, rows);

  const auto events = detect_crossings(sr, c.crossing_gap_threshold);
  std::vector<std::vector<double>> ev_rows;
  for (const auto& e : events) {
    fmt::print(s.out(), "crossing at {} GHz: tracks {}/{} gap {} GHz {}{}\n", format_number(e.strain_at_min_gap),
               e.track_a + 1, e.track_b + 1, format_number(e.min_gap), e.avoided ? "avoided" : "crossing",
               e.lower_branch ? " (lower branch)" : "");
    ev_rows.push_back({e.strain_at_min_gap, static_cast<double>(e.track_a + 1), static_cast<double>(e.track_b + 1),
                       e.min_gap, e.avoided ? 1.0 : 0.0, e.involves_sz ? 1.0 : 0.0, e.lower_branch ? 1.0 : 0.0});
  }
  s.csv("crossings.csv",
        {"delta_perp_ghz", "track_a", "track_b", "min_gap_ghz", "avoided", "involves_sz", "lower_branch"}, ev_rows);
}

void cmd_lines(Session& s, const StrainVector& strain) {
  std::vector<std::vector<CsvCell>> rows;
  for (const auto& l : transition_lines(s.cfg().fine, strain))
    rows.push_back({spin_name(l.ground), static_cast<double>(l.excited_index), l.detuning, l.strength,
                    l.spin_conserving ? 1.0 : 0.0, l.weak ? 1.0 : 0.0});
  s.csv("lines.csv", {"ground", "excited_index", "detuning_ghz", "strength", "spin_conserving", "weak"}, rows);
  fmt::print(s.out(), "resolved resonances at delta_perp = {} GHz (strength > 0.1):\n", format_number(strain.perp()));
  for (const auto& r : resolved_resonances(s.cfg().fine, strain))
    if (r.strength > 0.1)
      fmt::print(s.out(), "  {:>14} GHz  {} -> e{}  strength {}{}\n", format_number(r.detuning),
                 r.from_sz ? "gSz    " : "gSx,gSy", r.excited_index, format_number(r.strength),
                 r.spin_conserving ? "" : "  spin-flip");
}

void cmd_excitation(Session& s, const StrainVector& strain, bool mw_on) {
  const Config& c = s.cfg();
  const auto grid = linear_grid(c.detuning_min, c.detuning_max, static_cast<std::size_t>(c.detuning_points));
  const auto spec = excitation_spectrum(c.fine, strain, c.rates, grid, mw_on, c.execution);
  std::vector<std::vector<double>> rows;
  for (const auto& pt : spec) rows.push_back({pt.detuning, pt.pl_rate});
  s.csv(mw_on ? "excitation_mw_on.csv" : "excitation_mw_off.csv", {"detuning_ghz", "pl_rate"}, rows);
  for (const auto& pk : find_peaks(spec))
    fmt::print(s.out(), "peak {} GHz  PL {} /ns\n", format_number(pk.detuning), format_number(pk.height));
}

void cmd_rabi(Session& s, const StrainVector& strain, const std::string& readout, std::optional<double> omega) {
  const Config& c = s.cfg();
  const double w = omega.value_or(c.rabi_omega);
  const TransitionLine line = strongest_line(c.fine, strain, readout == "sz" ? Spin::sz : Spin::sx);
  const auto taus = linear_grid(0.0, c.rabi_tau_max, static_cast<std::size_t>(c.rabi_points));
  const auto trace = rabi_trace(c.fine, strain, c.rates, w, line, taus, c.execution);
  std::vector<std::vector<double>> rows;
  for (const auto& pt : trace) rows.push_back({pt.tau_ns, pt.counts});
  s.csv(fmt::format("rabi_{}.csv", readout), {"tau_ns", "counts"}, rows);
  fmt::print(s.out(), "readout {} line at {} GHz (e{}, strength {})\n", spin_name(line.ground),
             format_number(line.detuning), line.excited_index, format_number(line.strength));
  fmt::print(s.out(), "fitted period {} ns (2 pi / omega = {} ns)\n", format_number(fit_nutation_period(trace)),
             format_number(2.0 * std::numbers::pi / w));
}

void cmd_odmr(Session& s, const StrainVector& strain, bool scan, std::optional<double> temperature) {
  const Config& c = s.cfg();
  if (scan) {
    const auto temps =
        linear_grid(c.temperature_min, c.temperature_max, static_cast<std::size_t>(c.temperature_points));
    const auto curve = esr_contrast_vs_temperature(c.temperature_map, c.fine, strain, temps, c.esr_linewidth,
                                                   c.execution);
    std::vector<std::vector<double>> rows;
    for (const auto& pt : curve) rows.push_back({pt.temperature_k, pt.contrast});
    s.csv("odmr_contrast.csv", {"temp_k", "contrast"}, rows);
    return;
  }
  const double t = temperature.value_or(c.odmr_temperature);
  const BranchEsr br = branch_esr_frequencies(c.fine, strain);
  const ExchangeModel m{br.freq_a, br.freq_b, c.esr_linewidth, c.temperature_map.hop_rate(t), 0.5};
  const auto grid = linear_grid(c.odmr_freq_min, c.odmr_freq_max, static_cast<std::size_t>(c.odmr_freq_points));
  const auto shape = exchange_lineshape(m, grid, c.execution);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < grid.size(); ++k) rows.push_back({grid[k], shape[k]});
  s.csv("odmr_lineshape.csv", {"nu_ghz", "intensity"}, rows);
  fmt::print(s.out(), "T = {} K: hop rate {} GHz, branch lines {} / {} GHz, contrast {}\n", format_number(t),
             format_number(m.hop_rate), format_number(br.freq_a), format_number(br.freq_b),
             format_number(esr_contrast(m)));
}

void cmd_avg(Session& s, std::optional<double> max_strain) {
  const Config& c = s.cfg();
  const double hi = max_strain.value_or(c.avg_max_strain);
  if (!(hi > 0.0) || !std::isfinite(hi)) throw InputError("--max-strain: must be > 0");
  const auto grid = linear_grid(0.0, hi, static_cast<std::size_t>(c.avg_points));
  std::vector<std::vector<double>> rows(grid.size());
  for_each_index(c.execution, grid.size(),
                 [&](std::size_t i) { rows[i] = {grid[i], averaged_splitting(c.fine, grid[i])}; });
  double lo_v = rows.front()[1], hi_v = rows.front()[1];
  for (const auto& r : rows) lo_v = std::min(lo_v, r[1]), hi_v = std::max(hi_v, r[1]);
  s.csv("avg.csv", {"delta_perp_ghz", "averaged_splitting_ghz"}, rows);
  fmt::print(s.out(), "averaged splitting over [0, {}] GHz: min {} max {} GHz\n", format_number(hi),
             format_number(lo_v), format_number(hi_v));
}

int cmd_fit(Session& s, const std::string& input, bool free_lambda_perp, std::ostream& err) {
  const Config& c = s.cfg();
  const auto data = read_fit_csv(input);
  s.add_input(input);
  FitModel init;
  init.base = c.fine;
  init.lambda_z.value = c.fine.lambda_z;
  init.d_es.value = c.fine.d_es;
  init.delta_cap.value = c.fine.delta_cap;
  init.lambda_perp.value = c.fine.lambda_perp;
  init.lambda_perp.free = free_lambda_perp || c.fit_free_lambda_perp;
  FitOptions opt;
  opt.exec = c.execution;
  opt.strain_max = c.fit_strain_max;
  opt.max_iterations = c.fit_max_iterations;
  const FitResult r = fit(data, init, opt);

  std::string report;
  report += fmt::format("defects: {}\n", data.size());
  report += fmt::format("lambda_z = {} GHz\n", format_number(r.model.lambda_z.value));
  report += fmt::format("d_es = {} GHz\n", format_number(r.model.d_es.value));
  report += fmt::format("delta_cap = {} GHz\n", format_number(r.model.delta_cap.value));
  report += fmt::format("lambda_perp = {} GHz ({})\n", format_number(r.model.lambda_perp.value),
                        r.model.lambda_perp.free ? "free" : "fixed");
  report += fmt::format("residual rms = {} GHz\n", format_number(r.rms_ghz));
  report += fmt::format("iterations = {}, restarts = {}, final simplex size = {}\n", r.iterations, r.restarts,
                        format_number(r.final_simplex_size));
  report += fmt::format("converged = {}\n", r.converged ? "yes" : "no");
  fmt::print(s.out(), "{}", report);
  s.text("fit_report.txt", report);

  std::vector<std::vector<CsvCell>> rows;
  for (const auto& d : r.defects) rows.push_back({d.id, d.delta_perp, d.offset});
  s.csv("fit_strains.csv", {"defect_id", "delta_perp_ghz", "offset_ghz"}, rows);
  if (!r.converged) {
    fmt::print(err, "error: fit did not converge within {} iterations\n", c.fit_max_iterations);
    return 2;
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fine structure, optical dynamics and ESR of the NV- excited state under transverse strain"};
  app.require_subcommand(1, 1);
  std::optional<std::string> config_path, output_dir;
  bool serial = false;
  app.add_option("-c,--config", config_path, "config file (default: $NVSIM_CONFIG, then built-in defaults)");
  app.add_option("-o,--output-dir", output_dir, "output directory (overrides output_dir)");
  app.add_flag("--serial", serial, "run kernels on the serial reference path");

  auto* levels = app.add_subcommand("levels", "zero-strain level table");
  auto* sweep_cmd = app.add_subcommand("sweep", "level energies and characters versus delta_perp");
  std::optional<double> sweep_max;
  std::optional<int> sweep_points;
  sweep_cmd->add_option("--max-strain", sweep_max, "upper end of the strain grid (GHz)");
  sweep_cmd->add_option("--points", sweep_points, "number of grid points");

  auto* lines = app.add_subcommand("lines", "optical transition table at one strain");
  StrainArgs lines_strain;
  lines_strain.attach(lines);

  auto* excitation = app.add_subcommand("excitation", "stationary excitation spectrum");
  StrainArgs exc_strain;
  exc_strain.attach(excitation);
  bool mw_on = false, mw_off = false;
  auto* on_flag = excitation->add_flag("--mw-on", mw_on, "ground-state microwave mixing on (default)");
  excitation->add_flag("--mw-off", mw_off, "microwave off")->excludes(on_flag);

  auto* rabi = app.add_subcommand("rabi", "Rabi nutation trace");
  StrainArgs rabi_strain;
  rabi_strain.attach(rabi);
  std::string readout = "sz";
  std::optional<double> omega;
  rabi->add_option("--readout", readout, "readout line: sz or sxy")->check(CLI::IsMember({"sz", "sxy"}));
  rabi->add_option("--omega", omega, "Rabi angular frequency (1/ns)");

  auto* odmr = app.add_subcommand("odmr", "excited-state ESR lineshape, or contrast versus temperature");
  StrainArgs odmr_strain;
  odmr_strain.attach(odmr);
  bool temperature_scan = false;
  std::optional<double> temperature;
  odmr->add_flag("--temperature-scan", temperature_scan, "contrast versus temperature");
  odmr->add_option("--temperature", temperature, "temperature for the lineshape (K)");

  auto* avg = app.add_subcommand("avg", "orbital-averaged ESR splitting versus delta_perp");
  std::optional<double> max_strain;
  avg->add_option("--max-strain", max_strain, "upper end of the strain grid (GHz)");

  auto* fit_cmd = app.add_subcommand("fit", "fit zero-strain parameters to measured lines");
  std::string input;
  bool free_lambda_perp = false;
  fit_cmd->add_option("-i,--input", input, "CSV with columns defect_id,line_ghz[,sigma_ghz]")->required();
  fit_cmd->add_flag("--free-lambda-perp", free_lambda_perp, "also fit lambda_perp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  std::string command;
  for (int i = 1; i < argc; ++i) command += (i > 1 ? " " : "") + std::string(argv[i]);

  try {
    Config cfg;
    std::optional<std::string> used_config = config_path;
    if (!used_config)
      if (const char* env = std::getenv("NVSIM_CONFIG"); env && *env) used_config = env;
    if (used_config) cfg = load_config(*used_config);
    if (output_dir) cfg.output_dir = *output_dir;
    if (serial) cfg.execution = Execution::serial;
    if (sweep_max) cfg.sweep_max = *sweep_max;
    if (sweep_points) cfg.sweep_points = *sweep_points;
    cfg.validate();

    Session s(cfg, command, out);
    if (used_config) s.add_input(*used_config);
    int code = 0;
    std::string stem;
    if (levels->parsed()) {
      cmd_levels(s), stem = "levels";
    } else if (sweep_cmd->parsed()) {
      cmd_sweep(s), stem = "sweep";
    } else if (lines->parsed()) {
      cmd_lines(s, lines_strain.resolve(cfg.strain)), stem = "lines";
    } else if (excitation->parsed()) {
      const bool on = !mw_off;
      cmd_excitation(s, exc_strain.resolve(cfg.strain), on), stem = on ? "excitation_mw_on" : "excitation_mw_off";
    } else if (rabi->parsed()) {
      cmd_rabi(s, rabi_strain.resolve(cfg.strain), readout, omega), stem = "rabi_" + readout;
    } else if (odmr->parsed()) {
      cmd_odmr(s, odmr_strain.resolve(cfg.odmr_strain), temperature_scan, temperature);
      stem = temperature_scan ? "odmr_contrast" : "odmr_lineshape";
    } else if (avg->parsed()) {
      cmd_avg(s, max_strain), stem = "avg";
    } else if (fit_cmd->parsed()) {
      code = cmd_fit(s, input, free_lambda_perp, err), stem = "fit";
    }
    s.finish(stem);
    return code;
  } catch (const InputError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    fmt::print(err, "numerical failure: {}\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
}

}  // namespace nvsim
