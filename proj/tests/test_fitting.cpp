#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nvsim/error.hpp"
#include "nvsim/fitting.hpp"

using namespace nvsim;

namespace {

std::vector<double> spread_strains(std::size_t n) {
  std::vector<double> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(0.5 + 19.5 * static_cast<double>(i) / static_cast<double>(n - 1));
  return s;
}

std::vector<double> spread_offsets(std::size_t n) {
  std::vector<double> o;
  for (std::size_t i = 0; i < n; ++i) o.push_back(std::sin(1.7 * static_cast<double>(i)) * 4.0);
  return o;
}

FitModel truth_model(std::size_t n) {
  FitModel fm;
  fm.delta_perp = spread_strains(n);
  fm.offset = spread_offsets(n);
  return fm;
}

double rms(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::sqrt(s / static_cast<double>(r.size()));
}

// Exhaustive minimum of sum |pred - meas| over order-preserving injections.
double brute_force_cost(const std::vector<double>& pred, const std::vector<double>& meas) {
  const std::size_t n = pred.size(), m = meas.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(m), true);
  double best = 1e300;
  do {
    double c = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) c += std::abs(pred[i] - meas[j++]);
    best = std::min(best, c);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST_CASE("assign_lines examples") {
  const std::vector<double> pred{-6.7, -6.5, -2.0, 4.0, 4.2, 7.1};
  LineAssignment a = assign_lines(pred, pred);
  CHECK(a.cost == 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) CHECK(a.pairs[i] == std::pair{i, i});

  std::vector<double> shifted = pred;
  for (double& v : shifted) v += 0.01;
  a = assign_lines(pred, shifted);
  CHECK(a.cost == doctest::Approx(6 * 0.01));
  for (std::size_t i = 0; i < pred.size(); ++i) CHECK(a.pairs[i].second == i);

  const std::vector<double> too_many(7, 0.0);
  CHECK_THROWS_AS(assign_lines(pred, too_many), InputError);
}

TEST_CASE("assign_lines matches exhaustive search") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> pred(6), meas(4);
    for (double& v : pred) v = u(rng);
    for (double& v : meas) v = u(rng);
    std::sort(pred.begin(), pred.end());
    const LineAssignment a = assign_lines(pred, meas);
    std::sort(meas.begin(), meas.end());
    CHECK(a.cost == doctest::Approx(brute_force_cost(pred, meas)).epsilon(1e-12));
    REQUIRE(a.pairs.size() == 4);
    for (std::size_t k = 1; k < 4; ++k) CHECK(a.pairs[k].second > a.pairs[k - 1].second);
  }
}

TEST_CASE("residual round trip, gauge and sensitivity") {
  const std::size_t n = 8;
  const FitModel fm = truth_model(n);
  auto data = synthesize_defects(fm.params(), fm.delta_perp, fm.offset, 0.0, 1);
  for (double r : residuals(fm, data)) CHECK(std::abs(r) <= 1e-9 / 0.01);

  FitModel moved = fm;
  for (double& v : data[3].lines) v += 1.234;
  moved.offset[3] += 1.234;
  for (double r : residuals(moved, data)) CHECK(std::abs(r) <= 1e-9);

  FitModel off = fm;
  off.lambda_z.value += 0.1;
  const auto clean = synthesize_defects(fm.params(), fm.delta_perp, fm.offset, 0.0, 1);
  CHECK(rms(residuals(off, clean)) > 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    const std::span<const ObservedDefect> one(&clean[d], 1);
    FitModel single = off;
    single.delta_perp = {fm.delta_perp[d]};
    single.offset = {fm.offset[d]};
    CHECK(rms(residuals(single, one)) > 1e-3);
  }
}

TEST_CASE("noiseless fit from perturbed starts") {
  const std::size_t n = 12;
  const FitModel truth = truth_model(n);
  const auto data = synthesize_defects(truth.params(), truth.delta_perp, truth.offset, 0.0, 1);
  FitOptions opt;
  for (double scale : {0.8, 1.2}) {
    FitModel init;
    init.lambda_z.value = 5.3 * scale;
    init.d_es.value = 1.42 * (2.0 - scale);
    init.delta_cap.value = 1.55 * scale;
    const FitResult r = fit(data, init, opt);
    CHECK(r.converged);
    CHECK(r.rms_ghz < 1e-6);
    CHECK(std::abs(r.model.lambda_z.value - 5.3) <= 1e-4);
    CHECK(std::abs(r.model.d_es.value - 1.42) <= 1e-4);
    CHECK(std::abs(r.model.delta_cap.value - 1.55) <= 1e-4);
    for (std::size_t k = 1; k < r.objective_log.size(); ++k) CHECK(r.objective_log[k] <= r.objective_log[k - 1]);
    for (std::size_t d = 0; d < n; ++d) {
      CHECK(std::abs(r.defects[d].delta_perp - truth.delta_perp[d]) <= 1e-3);
      CHECK(std::abs(r.defects[d].offset - truth.offset[d]) <= 1e-3);
      CHECK(r.defects[d].assignment.pairs.size() == 6);
    }
  }
}

TEST_CASE("fit is reproducible, gauge invariant and parallel safe") {
  const std::size_t n = 10;
  const FitModel truth = truth_model(n);
  const auto data = synthesize_defects(truth.params(), truth.delta_perp, truth.offset, 0.01, 9);
  FitOptions serial;
  serial.exec = Execution::serial;
  const FitResult a = fit(data, FitModel{}, serial);
  const FitResult b = fit(data, FitModel{}, FitOptions{});
  const FitResult c = fit(data, FitModel{}, serial);
  CHECK(a.model.lambda_z.value == b.model.lambda_z.value);
  CHECK(a.model.d_es.value == b.model.d_es.value);
  CHECK(a.rms_ghz == b.rms_ghz);
  CHECK(a.model.lambda_z.value == c.model.lambda_z.value);
  CHECK(a.iterations == c.iterations);

  auto shifted = data;
  for (double& v : shifted[4].lines) v += 2.5;
  const FitResult s = fit(shifted, FitModel{}, serial);
  CHECK(std::abs(s.rms_ghz - a.rms_ghz) <= 1e-6);
  CHECK(std::abs(s.defects[4].offset - a.defects[4].offset - 2.5) <= 1e-4);
  CHECK(std::abs(s.model.lambda_z.value - a.model.lambda_z.value) <= 1e-4);
}

TEST_CASE("fit input errors") {
  const ObservedDefect lone{"NV1", {0.0, 3.0}, 0.01};
  FitModel init;
  init.lambda_perp.free = true;
  // two measured lines cannot support five free parameters (3 globals + strain + offset... + lambda_perp)
  CHECK_THROWS_AS(fit(std::span<const ObservedDefect>(&lone, 1), init), InputError);
  try {
    fit(std::span<const ObservedDefect>(&lone, 1), init);
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  CHECK_THROWS_AS(fit(std::span<const ObservedDefect>{}, FitModel{}), InputError);
  CHECK_THROWS_AS(ObservedDefect({"x", {1.0}, 0.01}).validate(), InputError);
  CHECK_THROWS_AS(ObservedDefect({"x", {1.0, NAN}, 0.01}).validate(), InputError);
  CHECK_THROWS_AS(ObservedDefect({"x", {1.0, 2.0}, 0.0}).validate(), InputError);

  FitModel bad;
  bad.lambda_z.value = 50.0;
  CHECK_THROWS_AS(bad.validate(0), InputError);
  FitModel sized;
  sized.delta_perp = {1.0};
  CHECK_THROWS_AS(sized.validate(1), InputError);
}
