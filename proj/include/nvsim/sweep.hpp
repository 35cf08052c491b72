#pragma once

// Transverse-strain sweeps: adiabatic level tracking, branch/spin
// classification, crossing detection, and the orbital-averaged ESR splitting.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nvsim/execution.hpp"
#include "nvsim/linalg.hpp"
#include "nvsim/model.hpp"

namespace nvsim {

struct LevelCharacter {
  double p_branch_x = 0.0;  // weight on the Ex orbital
  double p_sx = 0.0;
  double p_sy = 0.0;
  double p_sz = 0.0;
  std::optional<Symmetry> symmetry;  // set when overlap with a zero-strain state >= 0.9

  Spin dominant_spin() const;
};

// Throws InputError unless vec is a 6-vector with norm within 1e-9 of one.
LevelCharacter classify_level(std::span<const cplx> vec);

struct TrackPoint {
  double energy;
  LevelCharacter character;
};

struct SweepResult {
  std::vector<double> grid;  // delta_perp, ascending (GHz)
  std::array<std::vector<TrackPoint>, 6> tracks;
  // level_of_track[i][t]: sorted eigenvalue index occupied by track t at grid[i]
  std::vector<std::array<std::size_t, 6>> level_of_track;
  // overlaps[i](t, k) = |<track t at grid[i-1] | level k at grid[i]>|^2, empty for i = 0
  std::vector<std::array<std::array<double, 6>, 6>> overlaps;
  std::vector<bool> ambiguous;  // best assigned overlap^2 < 0.5 at this step
  FineStructureParams params;
};

// Diagonalizes H(p, delta_perp along x) at each grid point (in parallel when
// requested) and stitches tracks by greedy maximum overlap, sequentially in
// grid order. Output does not depend on `exec`.
SweepResult sweep(const FineStructureParams& p, std::span<const double> grid,
                  Execution exec = Execution::parallel);

std::vector<double> linear_grid(double lo, double hi, std::size_t points);

struct CrossingEvent {
  double strain_at_min_gap;
  std::size_t track_a;      // track on the lower sorted level at the grid minimum
  std::size_t track_b;
  std::size_t lower_level;  // sorted index k of the (k, k+1) pair
  double min_gap;
  bool avoided;
  bool involves_sz;       // one of the two levels has dominant Sz character
  bool lower_branch;      // both levels have p_branch_x < 0.5
};

// Gaps below this are reported as true crossings.
inline constexpr double kCrossingGapFloor = 1e-6;

// Interior local minima of adjacent-level gaps below gap_threshold, refined
// by golden-section search on the recomputed gap. `avoided` requires a
// dominant-spin exchange between the two levels across the minimum and a
// refined gap above kCrossingGapFloor.
std::vector<CrossingEvent> detect_crossings(const SweepResult& sr, double gap_threshold);

// Mean of the four ms=+-1-character eigenvalues minus the mean of the two
// ms=0-character eigenvalues (dominance by p_sz). When the p_sz ranking is
// not clean, the sorted positions of the ms=0 levels in the lambda_perp = 0
// spectrum are used instead. Throws NumericalError if no level has p_sz > 0.5.
double averaged_splitting(const FineStructureParams& p, double delta_perp);

// Gap between the Sz-character level and the nearer ms=+-1 level among the
// three highest levels.
double upper_branch_splitting(const FineStructureParams& p, double delta_perp);

// Smallest delta_perp in [0, 100] GHz where upper_branch_splitting == d_gs,
// bisected to |residual| < 1e-6 GHz. Throws NumericalError without a root.
double nv2_condition_strain(const FineStructureParams& p);

}  // namespace nvsim
