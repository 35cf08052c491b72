#include "nvsim/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {

EigenSystem eigen_at(const FineStructureParams& p, double delta_perp) {
  return hermitian_eigen(build_excited_hamiltonian(p, StrainVector::along_x(delta_perp)));
}

LevelCharacter character_of(const EigenSystem& es, std::size_t k) {
  const auto v = es.vectors.column(k);
  return classify_level(v);
}

double overlap2(const ComplexMatrix& a, std::size_t ca, const ComplexMatrix& b, std::size_t cb) {
  cplx acc{};
  for (std::size_t r = 0; r < a.rows(); ++r) acc += std::conj(a(r, ca)) * b(r, cb);
  return std::norm(acc);
}

double adjacent_gap(const FineStructureParams& p, double delta_perp, std::size_t k) {
  const EigenSystem es = eigen_at(p, delta_perp);
  return es.values[k + 1] - es.values[k];
}

// Golden-section minimization of f on [a, b].
template <class F>
double golden_minimize(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace

Spin LevelCharacter::dominant_spin() const {
  if (p_sz >= p_sx && p_sz >= p_sy) return Spin::sz;
  return p_sx >= p_sy ? Spin::sx : Spin::sy;
}

LevelCharacter classify_level(std::span<const cplx> vec) {
  if (vec.size() != 6) throw InputError("classify_level: expected a 6-component vector");
  double norm2 = 0.0;
  for (const cplx& c : vec) norm2 += std::norm(c);
  if (norm2 == 0.0) throw InputError("classify_level: zero vector");
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9)
    throw InputError("classify_level: vector not normalized (norm " + std::to_string(std::sqrt(norm2)) + ")");

  LevelCharacter ch;
  std::array<double, 3> spin{};
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t s = 0; s < 3; ++s) {
      const double w = std::norm(vec[o * 3 + s]);
      spin[s] += w;
      if (o == 0) ch.p_branch_x += w;
    }
  ch.p_sx = spin[0];
  ch.p_sy = spin[1];
  ch.p_sz = spin[2];

  const auto states = symmetry_states();
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (std::norm(inner(states[j], vec)) >= 0.9) {
      ch.symmetry = static_cast<Symmetry>(j);
      break;
    }
  }
  return ch;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points == 0) throw InputError("linear_grid: need at least one point");
  if (!(hi >= lo)) throw InputError("linear_grid: hi < lo");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

SweepResult sweep(const FineStructureParams& p, std::span<const double> grid, Execution exec) {
  p.validate();
  if (grid.empty()) throw InputError("sweep: empty strain grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0) throw InputError("sweep: grid values must be finite and >= 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("sweep: grid must be strictly ascending");
  }

  const std::size_t n = grid.size();
  std::vector<EigenSystem> eig(n);
  for_each_index(exec, n, [&](std::size_t i) { eig[i] = eigen_at(p, grid[i]); });

  SweepResult sr;
  sr.grid.assign(grid.begin(), grid.end());
  sr.params = p;
  sr.level_of_track.resize(n);
  sr.overlaps.resize(n);
  sr.ambiguous.assign(n, false);
  for (auto& t : sr.tracks) t.resize(n);

  std::iota(sr.level_of_track[0].begin(), sr.level_of_track[0].end(), std::size_t{0});
  for (std::size_t i = 1; i < n; ++i) {
    auto& ov = sr.overlaps[i];
    const auto& prev = sr.level_of_track[i - 1];
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t k = 0; k < 6; ++k) ov[t][k] = overlap2(eig[i - 1].vectors, prev[t], eig[i].vectors, k);

    std::array<std::size_t, 36> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ov[a / 6][a % 6] > ov[b / 6][b % 6]; });
    std::array<bool, 6> track_done{}, level_used{};
    for (std::size_t idx : order) {
      const std::size_t t = idx / 6, k = idx % 6;
      if (track_done[t] || level_used[k]) continue;
      track_done[t] = level_used[k] = true;
      sr.level_of_track[i][t] = k;
      if (ov[t][k] < 0.5) sr.ambiguous[i] = true;
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < 6; ++t) {
      const std::size_t k = sr.level_of_track[i][t];
      sr.tracks[t][i] = TrackPoint{eig[i].values[k], character_of(eig[i], k)};
    }
  return sr;
}

std::vector<CrossingEvent> detect_crossings(const SweepResult& sr, double gap_threshold) {
  if (!(gap_threshold > 0.0)) throw InputError("detect_crossings: gap_threshold must be > 0");
  const std::size_t n = sr.grid.size();
  std::vector<CrossingEvent> events;
  if (n < 3) return events;

  auto energy_of_level = [&](std::size_t i, std::size_t k) {
    for (std::size_t t = 0; t < 6; ++t)
      if (sr.level_of_track[i][t] == k) return sr.tracks[t][i].energy;
    return 0.0;
  };
  auto track_on_level = [&](std::size_t i, std::size_t k) {
    for (std::size_t t = 0; t < 6; ++t)
      if (sr.level_of_track[i][t] == k) return t;
    return std::size_t{0};
  };
  auto gap = [&](std::size_t i, std::size_t k) { return energy_of_level(i, k + 1) - energy_of_level(i, k); };

  for (std::size_t k = 0; k + 1 < 6; ++k) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double g = gap(i, k);
      if (!(g < gap_threshold && g <= gap(i - 1, k) && g < gap(i + 1, k))) continue;

      const double lo = sr.grid[i - 1], hi = sr.grid[i + 1];
      const double x = golden_minimize([&](double d) { return adjacent_gap(sr.params, d, k); }, lo, hi, 1e-10);
      const EigenSystem at = eigen_at(sr.params, x);

      CrossingEvent ev;
      ev.strain_at_min_gap = x;
      ev.lower_level = k;
      ev.min_gap = std::max(0.0, at.values[k + 1] - at.values[k]);
      ev.track_a = track_on_level(i, k);
      ev.track_b = track_on_level(i, k + 1);
      ev.lower_branch = character_of(at, k).p_branch_x < 0.5 && character_of(at, k + 1).p_branch_x < 0.5;

      // Compare track characters away from the mixing region.
      const double step = hi - lo;
      const double reach = std::max(step, 5.0 * ev.min_gap);
      std::size_t il = i, ir = i;
      while (il > 0 && sr.grid[il] > x - reach) --il;
      while (ir + 1 < n && sr.grid[ir] < x + reach) ++ir;
      const Spin al = sr.tracks[ev.track_a][il].character.dominant_spin();
      const Spin ar = sr.tracks[ev.track_a][ir].character.dominant_spin();
      const Spin bl = sr.tracks[ev.track_b][il].character.dominant_spin();
      const Spin br = sr.tracks[ev.track_b][ir].character.dominant_spin();
      const bool exchange = al != bl && al == br && bl == ar;
      ev.avoided = exchange && ev.min_gap > kCrossingGapFloor;
      ev.involves_sz = al == Spin::sz || ar == Spin::sz || bl == Spin::sz || br == Spin::sz;
      events.push_back(ev);
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const CrossingEvent& a, const CrossingEvent& b) {
    return a.strain_at_min_gap < b.strain_at_min_gap;
  });
  return events;
}

double averaged_splitting(const FineStructureParams& p, double delta_perp) {
  const EigenSystem es = eigen_at(p, delta_perp);
  std::array<double, 6> psz{};
  for (std::size_t k = 0; k < 6; ++k) psz[k] = character_of(es, k).p_sz;

  std::array<bool, 6> is_sz{};
  const auto count = std::count_if(psz.begin(), psz.end(), [](double v) { return v > 0.5; });
  if (count == 0)
    throw NumericalError("averaged_splitting: no level has dominant ms=0 character at delta_perp = " +
                         std::to_string(delta_perp));
  if (count == 2) {
    for (std::size_t k = 0; k < 6; ++k) is_sz[k] = psz[k] > 0.5;
  } else {
    // Decoupled reference: the ms=0 pair sits at -2 d_es/3 +- delta_perp.
    FineStructureParams ref = p;
    ref.lambda_perp = 0.0;
    const EigenSystem rs = eigen_at(ref, delta_perp);
    const double centre = p.zpl_offset + p.delta_z - 2.0 * p.d_es / 3.0;
    for (double target : {centre - delta_perp, centre + delta_perp}) {
      std::size_t best = 6;
      for (std::size_t k = 0; k < 6; ++k) {
        if (is_sz[k]) continue;
        if (best == 6 || std::abs(rs.values[k] - target) < std::abs(rs.values[best] - target)) best = k;
      }
      is_sz[best] = true;
    }
  }

  double sum_sz = 0.0, sum_pm = 0.0;
  for (std::size_t k = 0; k < 6; ++k) (is_sz[k] ? sum_sz : sum_pm) += es.values[k];
  return sum_pm / 4.0 - sum_sz / 2.0;
}

double upper_branch_splitting(const FineStructureParams& p, double delta_perp) {
  const EigenSystem es = eigen_at(p, delta_perp);
  std::size_t sz_level = 3;
  double best = -1.0;
  for (std::size_t k = 3; k < 6; ++k) {
    const double w = character_of(es, k).p_sz;
    if (w > best) {
      best = w;
      sz_level = k;
    }
  }
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 3; k < 6; ++k)
    if (k != sz_level) nearest = std::min(nearest, std::abs(es.values[k] - es.values[sz_level]));
  return nearest;
}

double nv2_condition_strain(const FineStructureParams& p) {
  p.validate();
  constexpr double kWindow = 100.0;
  constexpr double kTol = 1e-6;
  constexpr int kScanSteps = 2000;
  auto f = [&](double d) { return upper_branch_splitting(p, d) - p.d_gs; };

  double a = 0.0, fa = f(0.0);
  if (std::abs(fa) < kTol) return 0.0;
  for (int i = 1; i <= kScanSteps; ++i) {
    const double b = kWindow * i / kScanSteps;
    const double fb = f(b);
    if (std::abs(fb) < kTol) return b;
    if ((fa < 0.0) != (fb < 0.0)) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) < kTol) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      throw NumericalError("nv2_condition_strain: bisection did not reach 1e-6 GHz");
    }
    a = b;
    fa = fb;
  }
  throw NumericalError("nv2_condition_strain: no root of upper-branch splitting = d_gs (" +
                       std::to_string(p.d_gs) + " GHz) for delta_perp in [0, 100] GHz");
}

}  // namespace nvsim
