#pragma once

// Two-site exchange model of the excited-state ESR: thermally activated
// hopping between the Ex and Ey orbital branches collapses the two branch
// resonances into one line at their weighted mean.

#include <span>
#include <utility>
#include <vector>

#include "nvsim/execution.hpp"
#include "nvsim/model.hpp"

namespace nvsim {

inline constexpr double kBoltzmannMevPerK = 0.08617333262;
inline constexpr double kDefaultEsrLinewidth = 0.05;  // GHz
inline constexpr double kDefaultOdmrStrain = 10.0;    // GHz

struct ExchangeModel {
  double freq_a = 0.0;  // GHz
  double freq_b = 0.0;
  double linewidth_0 = kDefaultEsrLinewidth;  // FWHM of each uncoupled line
  double hop_rate = 0.0;                      // GHz
  double weight_a = 0.5;

  void validate() const;
  double mean_frequency() const { return weight_a * freq_a + (1.0 - weight_a) * freq_b; }
};

// Arrhenius hop rate r0 exp(-ea / kB T). Defaults put half contrast at
// 150 K for the default fine structure at 10 GHz strain.
struct TemperatureMap {
  double r0 = 24007.007;  // GHz
  double ea = 60.0;     // meV

  void validate() const;
  double hop_rate(double temperature_k) const;
};

struct BranchEsr {
  double freq_a;  // Ex branch: mean of the ms=+-1 pair minus the ms=0 level
  double freq_b;  // Ey branch
  double sub_splitting_a;
  double sub_splitting_b;
};

// Throws InputError when some level has branch weight between 0.1 and 0.9.
BranchEsr branch_esr_frequencies(const FineStructureParams& p, const StrainVector& s);

// -(1/pi) Re{ w^T [i 2 pi (nu - Omega) + K + Gamma0]^-1 w }
double exchange_intensity(const ExchangeModel& m, double nu);

std::vector<double> exchange_lineshape(const ExchangeModel& m, std::span<const double> grid,
                                       Execution exec = Execution::parallel);

// Intensity at the mean frequency, scaled so the fast-exchange limit is 1.
double esr_contrast(const ExchangeModel& m);

struct ContrastPoint {
  double temperature_k;
  double contrast;
};

std::vector<ContrastPoint> esr_contrast_vs_temperature(const TemperatureMap& tm, const FineStructureParams& p,
                                                       const StrainVector& s, std::span<const double> temps,
                                                       double linewidth_0 = kDefaultEsrLinewidth,
                                                       Execution exec = Execution::parallel);

// Hop rate at which esr_contrast falls to `level` (bisection in log rate).
double hop_rate_for_contrast(ExchangeModel m, double level);

// r0 such that contrast(half_temperature_k) = 1/2 for the given ea.
TemperatureMap calibrate_temperature_map(const FineStructureParams& p, const StrainVector& s, double ea_mev,
                                         double half_temperature_k = 150.0,
                                         double linewidth_0 = kDefaultEsrLinewidth);

// (d_es - e_es_coeff * delta_perp, d_es + e_es_coeff * delta_perp)
std::pair<double, double> averaged_split_large_strain(const FineStructureParams& p, double delta_perp);

}  // namespace nvsim
