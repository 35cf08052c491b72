#pragma once

// Excited-state (3E) fine-structure Hamiltonian and the ground-state triplet.
//
// Basis order of the 6-dimensional orbital (x) spin product space:
//   0: Ex Sx   1: Ex Sy   2: Ex Sz   3: Ey Sx   4: Ey Sy   5: Ey Sz
// where {Sx, Sy, Sz} is the zero-field spin basis (Sz is the ms = 0 state).
// All energies are in GHz.

#include <array>
#include <cstddef>
#include <string_view>

#include "nvsim/linalg.hpp"

namespace nvsim {

// Transverse stress-to-strain-energy conversion, about 1e3 GHz per GPa.
inline constexpr double kGhzPerGpa = 1.0e3;
// Zero-phonon line energy; H0 is carried as an additive offset relative to it.
inline constexpr double kZeroPhononLineEv = 1.945;

struct FineStructureParams {
  double lambda_z = 5.3;     // axial spin-orbit
  double lambda_perp = 0.2;  // transverse spin-orbit
  double d_es = 1.42;        // excited-state axial spin-spin
  double delta_cap = 1.55;   // A1/A2 splitting parameter
  double d_gs = 2.88;        // ground-state zero-field splitting
  double e_es_coeff = 0.0;   // dimensionless; Ees = e_es_coeff * delta_perp
  double delta_z = 0.0;      // axial strain shift
  double zpl_offset = 0.0;

  // Throws InputError on non-finite values, d_gs <= 0 or lambda_perp < 0.
  void validate() const;
};

struct StrainVector {
  double delta_x = 0.0;
  double delta_y = 0.0;

  double perp() const;
  static StrainVector along_x(double delta_perp) { return {delta_perp, 0.0}; }
};

enum class Orbital { ex = 0, ey = 1 };
enum class Spin { sx = 0, sy = 1, sz = 2 };

constexpr std::size_t basis_index(Orbital o, Spin s) {
  return static_cast<std::size_t>(o) * 3 + static_cast<std::size_t>(s);
}

inline constexpr std::array<std::string_view, 6> kBasisLabels = {
    "Ex,Sx", "Ex,Sy", "Ex,Sz", "Ey,Sx", "Ey,Sy", "Ey,Sz"};

struct OperatorSet {
  // 6x6 product-space operators
  ComplexMatrix lz_sz;          // Lz (x) Sz
  ComplexMatrix vx;             // Vx (x) 1
  ComplexMatrix vy;             // Vy (x) 1
  ComplexMatrix sx, sy, sz;     // 1 (x) S_i
  ComplexMatrix sz2;            // 1 (x) Sz^2
  ComplexMatrix sx2_minus_sy2;  // 1 (x) (Sx^2 - Sy^2)
  ComplexMatrix proj_a1;        // |A1><A1|
  ComplexMatrix proj_a2;        // |A2><A2|
  ComplexMatrix transverse_so;  // ms=0 <-> ms=+-1 coupling, scaled by lambda_perp
  // single-factor matrices
  ComplexMatrix orbital_lz;  // 2x2 on (Ex, Ey)
  ComplexMatrix spin_sx, spin_sy, spin_sz;  // 3x3 on (Sx, Sy, Sz)
  std::array<cplx, 6> a1_state;  // (Ex Sx + Ey Sy) / sqrt 2
  std::array<cplx, 6> a2_state;  // (Ey Sx - Ex Sy) / sqrt 2
};

OperatorSet build_operators();

// Cached, immutable copy of build_operators().
const OperatorSet& operators();

// H = (zpl_offset + delta_z) + H_so + H_ss + H_strain, 6x6 Hermitian.
//
// The transverse couplings (lambda_perp and e_es_coeff terms) are written in
// the strain principal frame, so the spectrum depends on (delta_x, delta_y)
// only through delta_perp. For strain along x:
//   H = -lambda_z Lz(x)Sz + d_es (Sz^2 - 2/3) + delta_cap (P_A2 - P_A1)
//       + lambda_perp T + delta_x Vx + e_es_coeff delta_perp (Sx^2 - Sy^2).
ComplexMatrix build_excited_hamiltonian(const FineStructureParams& p, const StrainVector& s);

struct GroundLevels {
  double sz;
  double sx;
  double sy;
};

// {-2 d_gs/3, d_gs/3, d_gs/3}
GroundLevels ground_levels(const FineStructureParams& p);

enum class Symmetry { e1, e2, ex_prime, ey_prime, a1, a2 };
std::string_view to_string(Symmetry s);

// Zero-strain eigenstates for the symmetry labels, in the basis order above.
std::array<std::array<cplx, 6>, 6> symmetry_states();

struct SymmetryLevel {
  double energy;
  Symmetry label;
};

// Zero-strain levels, ascending. Closed form when lambda_perp == 0, otherwise
// numerical diagonalization labelled by maximum overlap with symmetry_states().
std::array<SymmetryLevel, 6> zero_strain_levels(const FineStructureParams& p);

}  // namespace nvsim
