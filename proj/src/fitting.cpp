#include "nvsim/fitting.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <bit>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <fmt/format.h>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {

constexpr double kOutOfBounds = 1e30;

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

struct Profile {
  double chi2;
  double offset;
};

// Best offset and chi2 over all order-preserving injections of the sorted
// measured lines into the sorted predicted ones.
Profile profile_offset(std::span<const double> pred, std::span<const double> meas, double sigma) {
  const std::size_t n = meas.size(), m = pred.size();
  Profile best{std::numeric_limits<double>::infinity(), 0.0};
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n) continue;
    double shift = 0.0;
    std::size_t j = 0;
    std::array<double, 6> sel{};
    for (std::size_t k = 0; k < m; ++k)
      if (mask & (1u << k)) sel[j++] = pred[k];
    for (std::size_t i = 0; i < n; ++i) shift += meas[i] - sel[i];
    shift /= static_cast<double>(n);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (sel[i] + shift - meas[i]) / sigma;
      chi2 += r * r;
    }
    if (chi2 < best.chi2) best = {chi2, shift};
  }
  return best;
}

struct StrainProfile {
  double delta_perp;
  Profile profile;
};

StrainProfile profile_at(const FineStructureParams& p, double delta, std::span<const double> meas, double sigma) {
  return {delta, profile_offset(predicted_lines(p, delta), meas, sigma)};
}

StrainProfile coarse_scan(const FineStructureParams& p, std::span<const double> meas, double sigma,
                          const FitOptions& o) {
  StrainProfile best{0.0, {std::numeric_limits<double>::infinity(), 0.0}};
  const auto steps = static_cast<std::size_t>(std::ceil(o.strain_max / o.strain_step));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double d = std::min(o.strain_max, o.strain_step * static_cast<double>(k));
    const StrainProfile sp = profile_at(p, d, meas, sigma);
    if (sp.profile.chi2 < best.profile.chi2) best = sp;
  }
  return best;
}

StrainProfile local_search(const FineStructureParams& p, double centre, std::span<const double> meas, double sigma,
                           const FitOptions& o) {
  const double lo = std::max(0.0, centre - o.local_window);
  const double hi = std::min(o.strain_max, centre + o.local_window);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::brent_find_minima(
      [&](double d) { return profile_at(p, d, meas, sigma).profile.chi2; }, lo, hi,
      std::numeric_limits<double>::digits / 2, iters);
  StrainProfile sp = profile_at(p, r.first, meas, sigma);
  // The Brent bracket excludes its end points; the boundary delta_perp = 0 is a legitimate optimum.
  if (lo == 0.0) {
    const StrainProfile at_zero = profile_at(p, 0.0, meas, sigma);
    if (at_zero.profile.chi2 < sp.profile.chi2) sp = at_zero;
  }
  return sp;
}

struct Problem {
  std::span<const ObservedDefect> data;
  std::vector<std::vector<double>> meas;  // sorted lines per defect
  FitModel model;                         // globals updated in place
  std::vector<FitParameter*> free;
  std::vector<double> reference;          // per-defect strain centres
  FitOptions options;
  std::vector<StrainProfile> last;

  bool set_globals(const gsl_vector* x) {
    for (std::size_t k = 0; k < free.size(); ++k) {
      const double v = gsl_vector_get(x, k);
      if (!(v >= free[k]->lower && v <= free[k]->upper)) return false;
      free[k]->value = v;
    }
    return true;
  }

  double evaluate() {
    const FineStructureParams p = model.params();
    last.assign(data.size(), StrainProfile{});
    for_each_index(options.exec, data.size(), [&](std::size_t i) {
      last[i] = local_search(p, reference[i], meas[i], data[i].sigma, options);
    });
    double chi2 = 0.0;
    for (const StrainProfile& sp : last) chi2 += sp.profile.chi2;
    return chi2;
  }

  void rescan() {
    const FineStructureParams p = model.params();
    reference.assign(data.size(), 0.0);
    for_each_index(options.exec, data.size(), [&](std::size_t i) {
      reference[i] = coarse_scan(p, meas[i], data[i].sigma, options).delta_perp;
    });
  }
};

double objective(const gsl_vector* x, void* ctx) {
  auto* pr = static_cast<Problem*>(ctx);
  if (!pr->set_globals(x)) return kOutOfBounds;
  try {
    return pr->evaluate();
  } catch (const NumericalError&) {
    return kOutOfBounds;
  }
}

struct SimplexResult {
  int iterations = 0;
  double size = 0.0;
  bool converged = false;
};

SimplexResult run_simplex(Problem& pr, std::vector<double>& log) {
  const std::size_t n = pr.free.size();
  SimplexResult out;
  if (n == 0) {
    out.converged = true;
    return out;
  }
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(n), gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(n), gsl_vector_free);
  for (std::size_t k = 0; k < n; ++k) {
    gsl_vector_set(x.get(), k, pr.free[k]->value);
    gsl_vector_set(step.get(), k, 0.05 * std::max(std::abs(pr.free[k]->value), 1.0));
  }
  gsl_multimin_function fn{&objective, n, &pr};
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), gsl_multimin_fminimizer_free);
  if (gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get()) != GSL_SUCCESS)
    throw NumericalError("fit: could not initialize the simplex");

  for (int it = 0; it < pr.options.max_iterations; ++it) {
    const int status = gsl_multimin_fminimizer_iterate(s.get());
    ++out.iterations;
    log.push_back(s->fval);
    if (status != GSL_SUCCESS) break;
    out.size = gsl_multimin_fminimizer_size(s.get());
    if (gsl_multimin_test_size(out.size, pr.options.simplex_tolerance) == GSL_SUCCESS) {
      out.converged = true;
      break;
    }
  }
  out.size = gsl_multimin_fminimizer_size(s.get());
  pr.set_globals(s->x);
  return out;
}

}  // namespace

void ObservedDefect::validate() const {
  if (lines.size() < 2) throw InputError(fmt::format("defect {}: need at least 2 lines", id));
  if (lines.size() > 6) throw InputError(fmt::format("defect {}: at most 6 lines can be assigned", id));
  for (double l : lines)
    if (!std::isfinite(l)) throw InputError(fmt::format("defect {}: non-finite line position", id));
  if (!(sigma > 0.0)) throw InputError(fmt::format("defect {}: sigma must be > 0", id));
}

LineAssignment assign_lines(std::span<const double> predicted, std::span<const double> measured) {
  const std::size_t n = measured.size(), m = predicted.size();
  if (n > m)
    throw InputError(fmt::format("assign_lines: {} measured lines but only {} predicted", n, m));
  std::vector<std::size_t> mi(n), pi(m);
  std::iota(mi.begin(), mi.end(), std::size_t{0});
  std::iota(pi.begin(), pi.end(), std::size_t{0});
  std::stable_sort(mi.begin(), mi.end(), [&](auto a, auto b) { return measured[a] < measured[b]; });
  std::stable_sort(pi.begin(), pi.end(), [&](auto a, auto b) { return predicted[a] < predicted[b]; });

  // cost[i][j]: best cost of placing the first i measured among the first j predicted
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(m + 1, inf));
  std::vector<std::vector<bool>> took(n + 1, std::vector<bool>(m + 1, false));
  for (std::size_t j = 0; j <= m; ++j) cost[0][j] = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = i; j <= m; ++j) {
      const double match = cost[i - 1][j - 1] + std::abs(predicted[pi[j - 1]] - measured[mi[i - 1]]);
      const double skip = cost[i][j - 1];
      if (match <= skip) {
        cost[i][j] = match;
        took[i][j] = true;
      } else {
        cost[i][j] = skip;
      }
    }
  LineAssignment out;
  out.cost = cost[n][m];
  out.pairs.resize(n);
  for (std::size_t i = n, j = m; i > 0; --j) {
    if (took[i][j]) {
      out.pairs[i - 1] = {mi[i - 1], pi[j - 1]};
      --i;
    }
  }
  return out;
}

FineStructureParams FitModel::params() const {
  FineStructureParams p = base;
  p.lambda_z = lambda_z.value;
  p.d_es = d_es.value;
  p.delta_cap = delta_cap.value;
  p.lambda_perp = lambda_perp.value;
  return p;
}

std::size_t FitModel::free_global_count() const {
  return static_cast<std::size_t>(lambda_z.free) + d_es.free + delta_cap.free + lambda_perp.free;
}

void FitModel::validate(std::size_t n_defects) const {
  const std::pair<const char*, const FitParameter*> all[] = {
      {"lambda_z", &lambda_z}, {"d_es", &d_es}, {"delta_cap", &delta_cap}, {"lambda_perp", &lambda_perp}};
  for (const auto& [name, fp] : all) {
    if (!(fp->lower <= fp->upper)) throw InputError(fmt::format("fit parameter {}: lower > upper", name));
    if (!(fp->value >= fp->lower && fp->value <= fp->upper))
      throw InputError(fmt::format("fit parameter {} = {} outside [{}, {}]", name, fp->value, fp->lower, fp->upper));
  }
  if (delta_perp.size() != n_defects || offset.size() != n_defects)
    throw InputError("FitModel: per-defect strain/offset count does not match the data");
  for (double d : delta_perp)
    if (!(d >= 0.0) || !std::isfinite(d)) throw InputError("FitModel: delta_perp must be >= 0");
  params().validate();
}

std::vector<double> predicted_lines(const FineStructureParams& p, double delta_perp) {
  return hermitian_eigen(build_excited_hamiltonian(p, StrainVector::along_x(delta_perp))).values;
}

std::vector<double> residuals(const FitModel& fm, std::span<const ObservedDefect> data) {
  fm.validate(data.size());
  const FineStructureParams p = fm.params();
  std::vector<double> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ObservedDefect& d = data[i];
    d.validate();
    std::vector<double> pred = predicted_lines(p, fm.delta_perp[i]);
    for (double& v : pred) v += fm.offset[i];
    LineAssignment a;
    try {
      a = assign_lines(pred, d.lines);
    } catch (const InputError& e) {
      throw InputError(fmt::format("defect {}: {}", d.id, e.what()));
    }
    for (const auto& [m, k] : a.pairs) out.push_back((pred[k] - d.lines[m]) / d.sigma);
  }
  return out;
}

FitResult fit(std::span<const ObservedDefect> data, const FitModel& init, const FitOptions& options) {
  if (data.empty()) throw InputError("fit: no defects");
  std::size_t n_lines = 0;
  for (const ObservedDefect& d : data) {
    d.validate();
    n_lines += d.lines.size();
  }
  const std::size_t n_free = init.free_global_count() + 2 * data.size();
  if (n_lines < n_free)
    throw InputError(fmt::format(
        "fit: under-determined, {} measured lines for {} free parameters ({} global + 2 per defect x {} defects)",
        n_lines, n_free, init.free_global_count(), data.size()));
  if (!(options.strain_step > 0.0) || !(options.strain_max > 0.0) || !(options.local_window > 0.0))
    throw InputError("fit: strain search settings must be > 0");

  FitModel start = init;
  start.delta_perp.assign(data.size(), 0.0);
  start.offset.assign(data.size(), 0.0);
  start.validate(data.size());

  gsl_set_error_handler_off();
  Problem pr{data, {}, start, {}, {}, options, {}};
  for (const ObservedDefect& d : data) pr.meas.push_back(sorted_copy(d.lines));
  for (FitParameter* fp : {&pr.model.lambda_z, &pr.model.d_es, &pr.model.delta_cap, &pr.model.lambda_perp})
    if (fp->free) pr.free.push_back(fp);

  FitResult res;
  pr.rescan();
  SimplexResult sr;
  for (;;) {
    sr = run_simplex(pr, res.objective_log);
    res.iterations += sr.iterations;
    pr.evaluate();
    std::vector<double> settled(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) settled[i] = pr.last[i].delta_perp;
    pr.rescan();
    bool moved = false;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (std::abs(pr.reference[i] - settled[i]) > options.strain_step + 1e-12) {
        // only a real improvement justifies a restart
        const FineStructureParams p = pr.model.params();
        const double here = profile_at(p, settled[i], pr.meas[i], data[i].sigma).profile.chi2;
        const double there = local_search(p, pr.reference[i], pr.meas[i], data[i].sigma, options).profile.chi2;
        if (there < here * (1.0 - 1e-9)) moved = true; else pr.reference[i] = settled[i];
      } else {
        pr.reference[i] = settled[i];
      }
    if (!moved || res.restarts >= options.max_restarts) break;
    ++res.restarts;
  }

  res.chi2 = pr.evaluate();
  res.converged = sr.converged;
  res.final_simplex_size = sr.size;
  res.model = pr.model;
  res.model.delta_perp.resize(data.size());
  res.model.offset.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    res.model.delta_perp[i] = pr.last[i].delta_perp;
    res.model.offset[i] = pr.last[i].profile.offset;
  }
  const std::vector<double> r = residuals(res.model, data);
  double ss = 0.0;
  std::size_t k = 0;
  const FineStructureParams p = res.model.params();
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> pred = predicted_lines(p, res.model.delta_perp[i]);
    for (double& v : pred) v += res.model.offset[i];
    DefectFit df{data[i].id, res.model.delta_perp[i], res.model.offset[i], assign_lines(pred, data[i].lines)};
    for (std::size_t j = 0; j < data[i].lines.size(); ++j, ++k) {
      const double g = r[k] * data[i].sigma;
      ss += g * g;
    }
    res.defects.push_back(std::move(df));
  }
  res.rms_ghz = std::sqrt(ss / static_cast<double>(r.size()));
  return res;
}

std::vector<ObservedDefect> synthesize_defects(const FineStructureParams& p, std::span<const double> strains,
                                               std::span<const double> offsets, double noise_sigma,
                                               std::uint64_t seed) {
  if (strains.size() != offsets.size()) throw InputError("synthesize_defects: strain/offset count mismatch");
  if (!(noise_sigma >= 0.0)) throw InputError("synthesize_defects: noise_sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<ObservedDefect> out;
  for (std::size_t i = 0; i < strains.size(); ++i) {
    ObservedDefect d;
    d.id = fmt::format("NV{:02d}", i + 1);
    for (double e : predicted_lines(p, strains[i])) {
      const double eps = noise(rng);
      d.lines.push_back(e + offsets[i] + noise_sigma * eps);
    }
    if (noise_sigma > 0.0) d.sigma = noise_sigma;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace nvsim
