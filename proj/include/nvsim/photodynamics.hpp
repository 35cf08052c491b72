#pragma once

// Optical transition lines and a 10-level classical rate model:
// 3 ground sublevels, 6 excited eigenstates, 1 metastable singlet.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nvsim/dense.hpp"
#include "nvsim/execution.hpp"
#include "nvsim/model.hpp"

namespace nvsim {

struct TransitionLine {
  Spin ground;                 // ground sublevel gSz, gSx or gSy
  std::size_t excited_index;   // 1..6, ascending excited energy
  double detuning;             // GHz, excited minus ground energy
  // Spin-`ground` population of the excited eigenstate averaged over the two
  // orbital polarizations, so strengths from one ground sublevel sum to 1.
  double strength;
  bool spin_conserving;
  bool weak;                   // strength below the floor
};

inline constexpr double kWeakLineFloor = 1e-4;

// All 18 (ground, excited) pairs, ordered gSz, gSx, gSy then by excited index.
std::vector<TransitionLine> transition_lines(const FineStructureParams& p, const StrainVector& s,
                                             double weak_floor = kWeakLineFloor);

// gSx and gSy are degenerate, so their lines to the same excited level fall
// on one frequency. A resonance is one distinguishable optical line: either
// gSz -> e, or the merged gSx/gSy -> e doublet with the two strengths summed.
struct Resonance {
  double detuning;
  double strength;
  std::size_t excited_index;  // 1..6
  bool from_sz;
  bool spin_conserving;
  bool lower_branch;  // excited level has p_branch_x < 0.5
};

// Ascending detuning.
std::vector<Resonance> resolved_resonances(const FineStructureParams& p, const StrainVector& s);

struct RateParams {
  double gamma_rad = 1.0 / 12.0;       // 1/ns
  double k_isc_xy = 0.05;              // 1/ns
  double k_isc_z = 0.001;              // 1/ns
  double gamma_singlet = 1.0 / 300.0;  // 1/ns
  double beta_z = 0.9;
  double pump_green = 0.004;           // 1/ns per unit strength
  double pump_res_max = 0.1;           // 1/ns per unit strength
  double linewidth = 0.1;              // GHz FWHM
  double mw_mix_rate = 0.05;           // 1/ns

  // Throws InputError on negative or non-finite rates, beta_z outside [0, 1],
  // linewidth <= 0, or k_isc_z > k_isc_xy.
  void validate() const;
};

inline constexpr std::size_t kLevelCount = 10;
enum LevelSlot : std::size_t { kGroundSz = 0, kGroundSx = 1, kGroundSy = 2, kExcitedFirst = 3, kMetastable = 9 };

using LevelPopulations = std::array<double, kLevelCount>;

LevelPopulations uniform_ground();
// Throws InputError unless entries are >= -1e-12 and sum to 1 within 1e-9.
void check_simplex(const LevelPopulations& pop, double tol = 1e-9);

// Unit-peak Lorentzian with full width at half maximum `fwhm`.
double line_profile(double offset, double fwhm);

struct Drive {
  std::optional<double> laser_detuning;  // resonant laser, GHz
  bool mw_on = false;
  bool green_on = false;
};

// Generator G (1/ns) for dP/dt = G P; columns sum to zero.
RealMatrix build_rate_matrix(const FineStructureParams& p, const StrainVector& s, const RateParams& rp,
                             const Drive& drive);

// exp(G t) P. Throws InputError for a non-simplex input or t < 0, and
// NumericalError if the result leaves the simplex by more than 1e-9.
LevelPopulations propagate(const LevelPopulations& pop, const RealMatrix& g, double duration_ns);

// Stationary distribution of G (null vector normalized to unit sum).
LevelPopulations stationary_state(const RealMatrix& g);

struct SpectrumPoint {
  double detuning;
  double pl_rate;  // photons per ns
};

// Stationary PL under a resonant laser at each detuning (green off).
std::vector<SpectrumPoint> excitation_spectrum(const FineStructureParams& p, const StrainVector& s,
                                               const RateParams& rp, std::span<const double> detunings,
                                               bool mw_on, Execution exec = Execution::parallel);

struct PeakInfo {
  double detuning;  // parabolic-interpolated position
  double height;
};

// Interior local maxima higher than min_fraction of the global maximum.
std::vector<PeakInfo> find_peaks(std::span<const SpectrumPoint> spectrum, double min_fraction = 0.05);

inline constexpr double kInitPulseNs = 3000.0;
inline constexpr double kReadoutPulseNs = 1000.0;

struct RabiPoint {
  double tau_ns;
  double counts;  // integrated PL photons during readout
};

// Green initialization, coherent MW rotation between gSz and (gSx + gSy)/sqrt 2
// (populations only), then a resonant readout on `readout_line`.
std::vector<RabiPoint> rabi_trace(const FineStructureParams& p, const StrainVector& s, const RateParams& rp,
                                  double omega_mw, const TransitionLine& readout_line,
                                  std::span<const double> mw_durations_ns, Execution exec = Execution::parallel);

// Strongest gSz line (spin == Spin::sz) or strongest gSx line otherwise.
TransitionLine strongest_line(const FineStructureParams& p, const StrainVector& s, Spin ground);

// Least-squares fit of a + b cos(w t) + c sin(w t); returns 2 pi / w (ns).
double fit_nutation_period(std::span<const RabiPoint> trace);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace nvsim
