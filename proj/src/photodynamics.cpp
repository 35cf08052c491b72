#include "nvsim/photodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {

struct LevelStructure {
  std::array<double, 6> excited{};
  std::array<std::array<double, 3>, 6> spin{};  // spin[e][s], sums to 2 over e
  double strength(std::size_t e, std::size_t s) const { return 0.5 * spin[e][s]; }
  std::array<double, 6> branch_x{};
  std::array<double, 3> ground{};               // indexed by Spin
};

LevelStructure level_structure(const FineStructureParams& p, const StrainVector& s) {
  p.validate();
  const EigenSystem es = hermitian_eigen(build_excited_hamiltonian(p, s));
  LevelStructure ls;
  for (std::size_t e = 0; e < 6; ++e) {
    ls.excited[e] = es.values[e];
    for (std::size_t o = 0; o < 2; ++o)
      for (std::size_t k = 0; k < 3; ++k) {
        const double w = std::norm(es.vectors(o * 3 + k, e));
        ls.spin[e][k] += w;
        if (o == 0) ls.branch_x[e] += w;
      }
  }
  const GroundLevels g = ground_levels(p);
  ls.ground = {g.sx, g.sy, g.sz};
  return ls;
}

std::size_t ground_slot(std::size_t spin) {
  switch (static_cast<Spin>(spin)) {
    case Spin::sz: return kGroundSz;
    case Spin::sx: return kGroundSx;
    case Spin::sy: return kGroundSy;
  }
  return kGroundSz;
}

Spin dominant(const std::array<double, 3>& w) {
  if (w[2] >= w[0] && w[2] >= w[1]) return Spin::sz;
  return w[0] >= w[1] ? Spin::sx : Spin::sy;
}

RealMatrix generator(const LevelStructure& ls, const RateParams& rp, const Drive& drive) {
  RealMatrix g(kLevelCount, kLevelCount);
  auto add = [&g](std::size_t from, std::size_t to, double rate) {
    g(to, from) += rate;
    g(from, from) -= rate;
  };
  for (std::size_t e = 0; e < 6; ++e) {
    const std::size_t ex = kExcitedFirst + e;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t gs = ground_slot(k);
      const double w = ls.strength(e, k);
      add(ex, gs, rp.gamma_rad * ls.spin[e][k]);
      if (drive.laser_detuning) {
        const double prof = line_profile(*drive.laser_detuning - (ls.excited[e] - ls.ground[k]), rp.linewidth);
        if (std::isnan(prof))
          throw NumericalError("build_rate_matrix: line profile is NaN at laser detuning " +
                               std::to_string(*drive.laser_detuning));
        add(gs, ex, rp.pump_res_max * w * prof);
      }
      if (drive.green_on) add(gs, ex, rp.pump_green * w);
    }
    add(ex, kMetastable, rp.k_isc_xy * (ls.spin[e][0] + ls.spin[e][1]) + rp.k_isc_z * ls.spin[e][2]);
  }
  add(kMetastable, kGroundSz, rp.gamma_singlet * rp.beta_z);
  add(kMetastable, kGroundSx, rp.gamma_singlet * (1.0 - rp.beta_z) / 2.0);
  add(kMetastable, kGroundSy, rp.gamma_singlet * (1.0 - rp.beta_z) / 2.0);
  if (drive.mw_on) {
    for (std::size_t d : {kGroundSx, kGroundSy}) {
      add(kGroundSz, d, rp.mw_mix_rate);
      add(d, kGroundSz, rp.mw_mix_rate);
    }
  }
  return g;
}

double emitted_rate(const LevelPopulations& pop, const RateParams& rp) {
  double ex = 0.0;
  for (std::size_t e = 0; e < 6; ++e) ex += pop[kExcitedFirst + e];
  return rp.gamma_rad * ex;
}

// Population-only rotation between gSz and D = (gSx + gSy)/sqrt 2; the
// orthogonal doublet combination is a spectator.
LevelPopulations mw_rotate(const LevelPopulations& pop, double transfer) {
  LevelPopulations out = pop;
  const double pd = 0.5 * (pop[kGroundSx] + pop[kGroundSy]);
  const double pb = pd;
  const double sz = pop[kGroundSz];
  out[kGroundSz] = (1.0 - transfer) * sz + transfer * pd;
  const double pd_new = (1.0 - transfer) * pd + transfer * sz;
  out[kGroundSx] = out[kGroundSy] = 0.5 * (pd_new + pb);
  return out;
}

// Residual sum of squares of the best a + b cos(w t) + c sin(w t).
double sinusoid_sse(std::span<const RabiPoint> trace, double w) {
  RealMatrix ata(3, 3);
  std::vector<double> atb(3, 0.0);
  for (const RabiPoint& pt : trace) {
    const double basis[3] = {1.0, std::cos(w * pt.tau_ns), std::sin(w * pt.tau_ns)};
    for (std::size_t i = 0; i < 3; ++i) {
      atb[i] += basis[i] * pt.counts;
      for (std::size_t j = 0; j < 3; ++j) ata(i, j) += basis[i] * basis[j];
    }
  }
  const std::vector<double> c = solve_linear(ata, atb);
  double sse = 0.0;
  for (const RabiPoint& pt : trace) {
    const double model = c[0] + c[1] * std::cos(w * pt.tau_ns) + c[2] * std::sin(w * pt.tau_ns);
    sse += (pt.counts - model) * (pt.counts - model);
  }
  return sse;
}

}  // namespace

std::vector<TransitionLine> transition_lines(const FineStructureParams& p, const StrainVector& s,
                                             double weak_floor) {
  const LevelStructure ls = level_structure(p, s);
  std::vector<TransitionLine> lines;
  lines.reserve(18);
  for (Spin g : {Spin::sz, Spin::sx, Spin::sy}) {
    const auto k = static_cast<std::size_t>(g);
    for (std::size_t e = 0; e < 6; ++e) {
      const double strength = std::clamp(ls.strength(e, k), 0.0, 1.0);
      lines.push_back(TransitionLine{g, e + 1, ls.excited[e] - ls.ground[k], strength,
                                     dominant(ls.spin[e]) == g, strength < weak_floor});
    }
  }
  return lines;
}

std::vector<Resonance> resolved_resonances(const FineStructureParams& p, const StrainVector& s) {
  const LevelStructure ls = level_structure(p, s);
  std::vector<Resonance> out;
  for (std::size_t e = 0; e < 6; ++e) {
    const Spin dom = dominant(ls.spin[e]);
    const bool lower = ls.branch_x[e] < 0.5;
    out.push_back(Resonance{ls.excited[e] - ls.ground[2], ls.strength(e, 2), e + 1, true, dom == Spin::sz, lower});
    out.push_back(Resonance{ls.excited[e] - ls.ground[0], ls.strength(e, 0) + ls.strength(e, 1), e + 1, false,
                            dom != Spin::sz, lower});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Resonance& a, const Resonance& b) { return a.detuning < b.detuning; });
  return out;
}

void RateParams::validate() const {
  for (double v : {gamma_rad, k_isc_xy, k_isc_z, gamma_singlet, beta_z, pump_green, pump_res_max, linewidth,
                   mw_mix_rate})
    if (!std::isfinite(v) || v < 0.0) throw InputError("RateParams: rates must be finite and >= 0");
  if (beta_z > 1.0) throw InputError("RateParams: beta_z must lie in [0, 1]");
  if (!(linewidth > 0.0)) throw InputError("RateParams: linewidth must be > 0");
  if (k_isc_z > k_isc_xy) throw InputError("RateParams: k_isc_z must not exceed k_isc_xy");
}

LevelPopulations uniform_ground() {
  LevelPopulations pop{};
  pop[kGroundSz] = pop[kGroundSx] = pop[kGroundSy] = 1.0 / 3.0;
  return pop;
}

void check_simplex(const LevelPopulations& pop, double tol) {
  double sum = 0.0;
  for (double v : pop) {
    if (!std::isfinite(v) || v < -1e-12) throw InputError("populations must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) throw InputError("populations must sum to 1 (sum " + std::to_string(sum) + ")");
}

double line_profile(double offset, double fwhm) {
  const double x = 2.0 * offset / fwhm;
  return 1.0 / (1.0 + x * x);
}

RealMatrix build_rate_matrix(const FineStructureParams& p, const StrainVector& s, const RateParams& rp,
                             const Drive& drive) {
  rp.validate();
  return generator(level_structure(p, s), rp, drive);
}

LevelPopulations propagate(const LevelPopulations& pop, const RealMatrix& g, double duration_ns) {
  check_simplex(pop);
  if (!(duration_ns >= 0.0) || !std::isfinite(duration_ns))
    throw InputError("propagate: duration must be finite and >= 0");
  if (g.rows() != kLevelCount || g.cols() != kLevelCount) throw InputError("propagate: generator must be 10x10");
  if (duration_ns == 0.0) return pop;

  const std::vector<double> next = expm(g * duration_ns) * std::span<const double>(pop);
  LevelPopulations out{};
  double sum = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < kLevelCount; ++i) {
    out[i] = next[i];
    sum += next[i];
    worst = std::min(worst, next[i]);
  }
  if (std::abs(sum - 1.0) > 1e-9 || worst < -1e-9 || !std::isfinite(sum))
    throw NumericalError("propagate: result left the probability simplex (sum " + std::to_string(sum) +
                         ", min " + std::to_string(worst) + ")");
  return out;
}

LevelPopulations stationary_state(const RealMatrix& g) {
  const std::size_t n = g.rows();
  if (n != kLevelCount || g.cols() != n) throw InputError("stationary_state: generator must be 10x10");
  RealMatrix a = g;
  std::vector<double> b(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) a(n - 1, c) = 1.0;
  b[n - 1] = 1.0;
  const std::vector<double> x = solve_linear(a, b);
  LevelPopulations out{};
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(0.0, x[i]);
  return out;
}

std::vector<SpectrumPoint> excitation_spectrum(const FineStructureParams& p, const StrainVector& s,
                                               const RateParams& rp, std::span<const double> detunings,
                                               bool mw_on, Execution exec) {
  rp.validate();
  for (std::size_t i = 1; i < detunings.size(); ++i)
    if (!(detunings[i] > detunings[i - 1])) throw InputError("excitation_spectrum: detuning grid must ascend");
  const LevelStructure ls = level_structure(p, s);
  std::vector<SpectrumPoint> out(detunings.size());
  for_each_index(exec, detunings.size(), [&](std::size_t i) {
    Drive d;
    d.laser_detuning = detunings[i];
    d.mw_on = mw_on;
    LevelPopulations st;
    try {
      st = stationary_state(generator(ls, rp, d));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at detuning " + std::to_string(detunings[i]) + " GHz");
    }
    out[i] = SpectrumPoint{detunings[i], emitted_rate(st, rp)};
  });
  return out;
}

std::vector<PeakInfo> find_peaks(std::span<const SpectrumPoint> spectrum, double min_fraction) {
  std::vector<PeakInfo> peaks;
  if (spectrum.size() < 3) return peaks;
  double top = 0.0;
  for (const auto& pt : spectrum) top = std::max(top, pt.pl_rate);
  for (std::size_t i = 1; i + 1 < spectrum.size(); ++i) {
    const double y0 = spectrum[i - 1].pl_rate, y1 = spectrum[i].pl_rate, y2 = spectrum[i + 1].pl_rate;
    if (!(y1 > y0 && y1 >= y2 && y1 >= min_fraction * top)) continue;
    const double x0 = spectrum[i - 1].detuning, x1 = spectrum[i].detuning, x2 = spectrum[i + 1].detuning;
    // vertex of the parabola through the three samples
    const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
    const double curv = (d12 - d01) / (x2 - x0);
    double x = x1;
    if (curv < 0.0) x = std::clamp(0.5 * (x0 + x1) - d01 / (2.0 * curv), x0, x2);
    peaks.push_back(PeakInfo{x, y1});
  }
  return peaks;
}

std::vector<RabiPoint> rabi_trace(const FineStructureParams& p, const StrainVector& s, const RateParams& rp,
                                  double omega_mw, const TransitionLine& readout_line,
                                  std::span<const double> mw_durations_ns, Execution exec) {
  rp.validate();
  if (!(omega_mw > 0.0) || !std::isfinite(omega_mw)) throw InputError("rabi_trace: omega_mw must be > 0");
  if (!(readout_line.strength > 0.0)) throw InputError("rabi_trace: readout line has zero strength");
  for (double t : mw_durations_ns)
    if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("rabi_trace: MW durations must be >= 0");

  const LevelStructure ls = level_structure(p, s);
  Drive green;
  green.green_on = true;
  const LevelPopulations initialized = propagate(uniform_ground(), generator(ls, rp, green), kInitPulseNs);

  // Augmented generator: the extra row accumulates emitted photons.
  Drive readout;
  readout.laser_detuning = readout_line.detuning;
  const RealMatrix g = generator(ls, rp, readout);
  RealMatrix aug(kLevelCount + 1, kLevelCount + 1);
  for (std::size_t r = 0; r < kLevelCount; ++r)
    for (std::size_t c = 0; c < kLevelCount; ++c) aug(r, c) = g(r, c);
  for (std::size_t e = 0; e < 6; ++e) aug(kLevelCount, kExcitedFirst + e) = rp.gamma_rad;
  const RealMatrix flow = expm(aug * kReadoutPulseNs);

  std::vector<RabiPoint> out(mw_durations_ns.size());
  for_each_index(exec, mw_durations_ns.size(), [&](std::size_t i) {
    const double tau = mw_durations_ns[i];
    const double half = std::sin(0.5 * omega_mw * tau);
    const LevelPopulations rotated = mw_rotate(initialized, half * half);
    check_simplex(rotated);
    double counts = 0.0;
    for (std::size_t j = 0; j < kLevelCount; ++j) counts += flow(kLevelCount, j) * rotated[j];
    out[i] = RabiPoint{tau, counts};
  });
  return out;
}

TransitionLine strongest_line(const FineStructureParams& p, const StrainVector& s, Spin ground) {
  const Spin want = ground == Spin::sz ? Spin::sz : Spin::sx;
  std::optional<TransitionLine> best;
  for (const TransitionLine& l : transition_lines(p, s))
    if (l.ground == want && (!best || l.strength > best->strength)) best = l;
  return *best;
}

double fit_nutation_period(std::span<const RabiPoint> trace) {
  if (trace.size() < 6) throw InputError("fit_nutation_period: need at least 6 points");
  double span = trace.back().tau_ns - trace.front().tau_ns;
  double min_step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < trace.size(); ++i) min_step = std::min(min_step, trace[i].tau_ns - trace[i - 1].tau_ns);
  if (!(span > 0.0) || !(min_step > 0.0)) throw InputError("fit_nutation_period: durations must ascend");

  const double w_lo = std::numbers::pi / span;
  const double w_hi = std::numbers::pi / min_step;
  constexpr int kScan = 4000;
  auto sse = [&](double w) {
    try {
      return sinusoid_sse(trace, w);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<double> ws(kScan + 1);
  for (int k = 0; k <= kScan; ++k) {
    ws[k] = w_lo + (w_hi - w_lo) * k / kScan;
    const double v = sse(ws[k]);
    if (v < best_sse) {
      best_sse = v;
      best = k;
    }
  }
  double a = ws[std::max(best - 1, 0)], b = ws[std::min(best + 1, kScan)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = sse(c), fd = sse(d);
  while (b - a > 1e-12 * w_hi) {
    if (fc <= fd) {
      b = d, d = c, fd = fc, c = b - inv_phi * (b - a), fc = sse(c);
    } else {
      a = c, c = d, fc = fd, d = a + inv_phi * (b - a), fd = sse(d);
    }
  }
  return 2.0 * std::numbers::pi / (0.5 * (a + b));
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("pearson_correlation: need equal-length series");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericalError("pearson_correlation: constant series");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace nvsim
