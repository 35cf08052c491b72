#include "nvsim/motional_esr.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nvsim/error.hpp"

namespace nvsim {

void ExchangeModel::validate() const {
  if (!(freq_a > 0.0) || !(freq_b > 0.0) || !std::isfinite(freq_a) || !std::isfinite(freq_b))
    throw InputError("ExchangeModel: frequencies must be > 0");
  if (!(linewidth_0 > 0.0) || !std::isfinite(linewidth_0)) throw InputError("ExchangeModel: linewidth_0 must be > 0");
  if (!(hop_rate >= 0.0) || !std::isfinite(hop_rate)) throw InputError("ExchangeModel: hop_rate must be >= 0");
  if (!(weight_a >= 0.0 && weight_a <= 1.0)) throw InputError("ExchangeModel: weight_a must lie in [0, 1]");
}

void TemperatureMap::validate() const {
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw InputError("TemperatureMap: r0 must be > 0");
  if (!(ea >= 0.0) || !std::isfinite(ea)) throw InputError("TemperatureMap: ea must be >= 0");
}

double TemperatureMap::hop_rate(double temperature_k) const {
  if (!(temperature_k > 0.0)) throw InputError("TemperatureMap: temperature must be > 0 K");
  return r0 * std::exp(-ea / (kBoltzmannMevPerK * temperature_k));
}

BranchEsr branch_esr_frequencies(const FineStructureParams& p, const StrainVector& s) {
  p.validate();
  const EigenSystem es = hermitian_eigen(build_excited_hamiltonian(p, s));
  std::vector<std::size_t> branch[2];
  std::array<double, 6> psz{};
  for (std::size_t k = 0; k < 6; ++k) {
    double px = 0.0;
    for (std::size_t r = 0; r < 3; ++r) px += std::norm(es.vectors(r, k));
    psz[k] = std::norm(es.vectors(2, k)) + std::norm(es.vectors(5, k));
    if (px > 0.1 && px < 0.9)
      throw InputError("branch_esr_frequencies: orbital branches unresolved at delta_perp = " +
                       std::to_string(s.perp()) + " GHz (level " + std::to_string(k + 1) +
                       " has Ex weight " + std::to_string(px) + ")");
    branch[px >= 0.5 ? 0 : 1].push_back(k);
  }
  double freq[2], sub[2];
  for (int b = 0; b < 2; ++b) {
    if (branch[b].size() != 3) throw InputError("branch_esr_frequencies: unbalanced branch membership");
    std::size_t z = branch[b][0];
    for (std::size_t k : branch[b])
      if (psz[k] > psz[z]) z = k;
    double pair[2];
    int n = 0;
    for (std::size_t k : branch[b])
      if (k != z) pair[n++] = es.values[k];
    freq[b] = 0.5 * (pair[0] + pair[1]) - es.values[z];
    sub[b] = std::abs(pair[1] - pair[0]);
  }
  return BranchEsr{freq[0], freq[1], sub[0], sub[1]};
}

double exchange_intensity(const ExchangeModel& m, double nu) {
  const double wa = m.weight_a, wb = 1.0 - wa;
  const double cross = 2.0 * std::sqrt(wa * wb) * m.hop_rate;
  const double damping = std::numbers::pi * m.linewidth_0;
  const cplx i{0.0, 1.0};
  // M = i 2 pi (nu - Omega) + K + Gamma0, K symmetrized with detailed balance
  const cplx m00 = i * (2.0 * std::numbers::pi * (nu - m.freq_a)) - 2.0 * wb * m.hop_rate - damping;
  const cplx m11 = i * (2.0 * std::numbers::pi * (nu - m.freq_b)) - 2.0 * wa * m.hop_rate - damping;
  const cplx det = m00 * m11 - cross * cross;
  if (std::abs(det) == 0.0) throw NumericalError("exchange_intensity: singular exchange matrix");
  const double ua = std::sqrt(wa), ub = std::sqrt(wb);
  // w^T M^-1 w with M^-1 = [[m11, -cross], [-cross, m00]] / det
  const cplx q = (ua * ua * m11 + ub * ub * m00 - 2.0 * ua * ub * cross) / det;
  return -q.real() / std::numbers::pi;
}

std::vector<double> exchange_lineshape(const ExchangeModel& m, std::span<const double> grid, Execution exec) {
  m.validate();
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw InputError("exchange_lineshape: grid must ascend");
  std::vector<double> out(grid.size());
  for_each_index(exec, grid.size(), [&](std::size_t k) { out[k] = exchange_intensity(m, grid[k]); });
  return out;
}

double esr_contrast(const ExchangeModel& m) {
  m.validate();
  const double fast_limit_peak = 1.0 / (std::numbers::pi * std::numbers::pi * m.linewidth_0);
  return exchange_intensity(m, m.mean_frequency()) / fast_limit_peak;
}

std::vector<ContrastPoint> esr_contrast_vs_temperature(const TemperatureMap& tm, const FineStructureParams& p,
                                                       const StrainVector& s, std::span<const double> temps,
                                                       double linewidth_0, Execution exec) {
  tm.validate();
  const BranchEsr br = branch_esr_frequencies(p, s);
  for (double t : temps)
    if (!(t > 0.0) || !std::isfinite(t)) throw InputError("esr_contrast_vs_temperature: temperatures must be > 0");
  std::vector<ContrastPoint> out(temps.size());
  for_each_index(exec, temps.size(), [&](std::size_t k) {
    ExchangeModel m{br.freq_a, br.freq_b, linewidth_0, tm.hop_rate(temps[k]), 0.5};
    out[k] = ContrastPoint{temps[k], esr_contrast(m)};
  });
  return out;
}

double hop_rate_for_contrast(ExchangeModel m, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("hop_rate_for_contrast: level must lie in (0, 1)");
  auto c = [&](double log_k) {
    m.hop_rate = std::exp(log_k);
    return esr_contrast(m) - level;
  };
  double lo = std::log(1e-6), hi = std::log(1e9);
  if (c(lo) > 0.0 || c(hi) < 0.0) throw NumericalError("hop_rate_for_contrast: level not bracketed");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (c(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

TemperatureMap calibrate_temperature_map(const FineStructureParams& p, const StrainVector& s, double ea_mev,
                                         double half_temperature_k, double linewidth_0) {
  if (!(ea_mev >= 0.0) || !(half_temperature_k > 0.0)) throw InputError("calibrate_temperature_map: bad inputs");
  const BranchEsr br = branch_esr_frequencies(p, s);
  const double k_half = hop_rate_for_contrast(ExchangeModel{br.freq_a, br.freq_b, linewidth_0, 0.0, 0.5}, 0.5);
  return TemperatureMap{k_half * std::exp(ea_mev / (kBoltzmannMevPerK * half_temperature_k)), ea_mev};
}

std::pair<double, double> averaged_split_large_strain(const FineStructureParams& p, double delta_perp) {
  if (p.e_es_coeff < 0.0) throw InputError("averaged_split_large_strain: e_es_coeff must be >= 0");
  const double es = p.e_es_coeff * delta_perp;
  return {p.d_es - es, p.d_es + es};
}

}  // namespace nvsim
