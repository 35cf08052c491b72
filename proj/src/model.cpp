#include "nvsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {

const cplx I{0.0, 1.0};

// Joint rotation of the orbital doublet and the transverse spin pair by phi.
// It leaves Lz(x)Sz, Sz^2 and the A1/A2 projectors invariant and carries
// Vx to cos(2 phi) Vx + sin(2 phi) Vy.
ComplexMatrix joint_rotation(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const ComplexMatrix orbital{{c, -s}, {s, c}};
  const ComplexMatrix spin{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}};
  return kron(orbital, spin);
}

}  // namespace

void FineStructureParams::validate() const {
  for (double v : {lambda_z, lambda_perp, d_es, delta_cap, d_gs, e_es_coeff, delta_z, zpl_offset})
    if (!std::isfinite(v)) throw InputError("FineStructureParams: non-finite value");
  if (!(d_gs > 0.0)) throw InputError("FineStructureParams: d_gs must be > 0");
  if (lambda_perp < 0.0) throw InputError("FineStructureParams: lambda_perp must be >= 0");
}

double StrainVector::perp() const { return std::hypot(delta_x, delta_y); }

OperatorSet build_operators() {
  OperatorSet ops;
  const ComplexMatrix id2 = ComplexMatrix::identity(2);
  const ComplexMatrix id3 = ComplexMatrix::identity(3);

  // Spin-1 operators in the zero-field basis: (S_k)_ij = -i eps_kij.
  ops.spin_sx = ComplexMatrix{{0.0, 0.0, 0.0}, {0.0, 0.0, -I}, {0.0, I, 0.0}};
  ops.spin_sy = ComplexMatrix{{0.0, 0.0, I}, {0.0, 0.0, 0.0}, {-I, 0.0, 0.0}};
  ops.spin_sz = ComplexMatrix{{0.0, -I, 0.0}, {I, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  ops.orbital_lz = ComplexMatrix{{0.0, -I}, {I, 0.0}};
  const ComplexMatrix orbital_vx{{1.0, 0.0}, {0.0, -1.0}};
  const ComplexMatrix orbital_vy{{0.0, 1.0}, {1.0, 0.0}};

  const ComplexMatrix& sx = ops.spin_sx;
  const ComplexMatrix& sy = ops.spin_sy;
  const ComplexMatrix& sz = ops.spin_sz;

  ops.lz_sz = kron(ops.orbital_lz, sz);
  ops.vx = kron(orbital_vx, id3);
  ops.vy = kron(orbital_vy, id3);
  ops.sx = kron(id2, sx);
  ops.sy = kron(id2, sy);
  ops.sz = kron(id2, sz);
  ops.sz2 = kron(id2, sz * sz);
  ops.sx2_minus_sy2 = kron(id2, sx * sx - sy * sy);

  const double r = 1.0 / std::numbers::sqrt2;
  ops.a1_state = {};
  ops.a1_state[basis_index(Orbital::ex, Spin::sx)] = r;
  ops.a1_state[basis_index(Orbital::ey, Spin::sy)] = r;
  ops.a2_state = {};
  ops.a2_state[basis_index(Orbital::ey, Spin::sx)] = r;
  ops.a2_state[basis_index(Orbital::ex, Spin::sy)] = -r;
  ops.proj_a1 = ComplexMatrix::outer(ops.a1_state, ops.a1_state);
  ops.proj_a2 = ComplexMatrix::outer(ops.a2_state, ops.a2_state);

  // Time-reversal-even quadrupolar coupling of ms=0 to ms=+-1:
  // Re[exp(-i pi/4) (Vx + i Vy)(Qxz + i Qyz)] with Q_ab = Sa Sb + Sb Sa.
  const ComplexMatrix qxz = sx * sz + sz * sx;
  const ComplexMatrix qyz = sy * sz + sz * sy;
  ops.transverse_so = (kron(orbital_vx, qxz + qyz) + kron(orbital_vy, qxz - qyz)) * cplx{r, 0.0};
  return ops;
}

const OperatorSet& operators() {
  static const OperatorSet ops = build_operators();
  return ops;
}

ComplexMatrix build_excited_hamiltonian(const FineStructureParams& p, const StrainVector& s) {
  const OperatorSet& ops = operators();
  const ComplexMatrix id6 = ComplexMatrix::identity(6);
  const double delta_perp = s.perp();

  ComplexMatrix h = id6 * cplx{p.zpl_offset + p.delta_z, 0.0};
  h += ops.lz_sz * cplx{-p.lambda_z, 0.0};
  h += (ops.sz2 - id6 * cplx{2.0 / 3.0, 0.0}) * cplx{p.d_es, 0.0};
  h += (ops.proj_a2 - ops.proj_a1) * cplx{p.delta_cap, 0.0};
  h += ops.vx * cplx{s.delta_x, 0.0};
  h += ops.vy * cplx{s.delta_y, 0.0};

  ComplexMatrix transverse = ops.transverse_so * cplx{p.lambda_perp, 0.0};
  transverse += ops.sx2_minus_sy2 * cplx{p.e_es_coeff * delta_perp, 0.0};
  if (delta_perp > 0.0 && s.delta_y != 0.0) {
    const ComplexMatrix rot = joint_rotation(0.5 * std::atan2(s.delta_y, s.delta_x));
    transverse = rot * transverse * rot.adjoint();
  }
  h += transverse;
  return h;
}

GroundLevels ground_levels(const FineStructureParams& p) {
  return {-2.0 * p.d_gs / 3.0, p.d_gs / 3.0, p.d_gs / 3.0};
}

std::string_view to_string(Symmetry s) {
  switch (s) {
    case Symmetry::e1: return "E1";
    case Symmetry::e2: return "E2";
    case Symmetry::ex_prime: return "E'x";
    case Symmetry::ey_prime: return "E'y";
    case Symmetry::a1: return "A1";
    case Symmetry::a2: return "A2";
  }
  return "?";
}

std::array<std::array<cplx, 6>, 6> symmetry_states() {
  const double r = 1.0 / std::numbers::sqrt2;
  std::array<std::array<cplx, 6>, 6> st{};
  auto& e1 = st[static_cast<std::size_t>(Symmetry::e1)];
  e1[basis_index(Orbital::ex, Spin::sx)] = r;
  e1[basis_index(Orbital::ey, Spin::sy)] = -r;
  auto& e2 = st[static_cast<std::size_t>(Symmetry::e2)];
  e2[basis_index(Orbital::ex, Spin::sy)] = r;
  e2[basis_index(Orbital::ey, Spin::sx)] = r;
  st[static_cast<std::size_t>(Symmetry::ex_prime)][basis_index(Orbital::ex, Spin::sz)] = 1.0;
  st[static_cast<std::size_t>(Symmetry::ey_prime)][basis_index(Orbital::ey, Spin::sz)] = 1.0;
  st[static_cast<std::size_t>(Symmetry::a1)] = operators().a1_state;
  st[static_cast<std::size_t>(Symmetry::a2)] = operators().a2_state;
  return st;
}

std::array<SymmetryLevel, 6> zero_strain_levels(const FineStructureParams& p) {
  p.validate();
  const double shift = p.zpl_offset + p.delta_z;
  std::array<SymmetryLevel, 6> out{};
  if (p.lambda_perp == 0.0) {
    const double e_pair = -p.lambda_z + p.d_es / 3.0;
    const double e_prime = -2.0 * p.d_es / 3.0;
    const double a_mid = p.lambda_z + p.d_es / 3.0;
    out = {SymmetryLevel{shift + e_pair, Symmetry::e1}, {shift + e_pair, Symmetry::e2},
           {shift + e_prime, Symmetry::ex_prime},       {shift + e_prime, Symmetry::ey_prime},
           {shift + a_mid - p.delta_cap, Symmetry::a1}, {shift + a_mid + p.delta_cap, Symmetry::a2}};
  } else {
    const EigenSystem es = hermitian_eigen(build_excited_hamiltonian(p, StrainVector{}));
    const auto states = symmetry_states();
    std::array<bool, 6> used{};
    for (std::size_t k = 0; k < 6; ++k) {
      const auto v = es.vectors.column(k);
      std::size_t best = 0;
      double best_overlap = -1.0;
      for (std::size_t j = 0; j < 6; ++j) {
        if (used[j]) continue;
        const double ov = std::norm(inner(states[j], v));
        if (ov > best_overlap) {
          best_overlap = ov;
          best = j;
        }
      }
      used[best] = true;
      out[k] = {es.values[k], static_cast<Symmetry>(best)};
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SymmetryLevel& a, const SymmetryLevel& b) { return a.energy < b.energy; });
  return out;
}

}  // namespace nvsim
