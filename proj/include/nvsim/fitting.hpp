#pragma once

// Estimation of the zero-strain fine-structure parameters from measured
// excitation-line positions of many defects with unknown strain.
//
// Each defect contributes up to six lines, compared against the six excited
// eigenvalues at that defect's delta_perp plus a free per-defect offset (the
// ground reference, axial strain and ZPL inhomogeneity all fold into it).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvsim/execution.hpp"
#include "nvsim/model.hpp"

namespace nvsim {

struct ObservedDefect {
  std::string id;
  std::vector<double> lines;  // GHz, arbitrary per-defect reference
  double sigma = 0.01;        // GHz

  void validate() const;
};

struct LineAssignment {
  // (index into measured, index into predicted), ascending in measured value
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;  // sum |pred - meas|
};

// Optimal order-preserving injection of the measured lines into the predicted
// ones by dynamic programming over both sorted lists.
LineAssignment assign_lines(std::span<const double> predicted, std::span<const double> measured);

struct FitParameter {
  double value;
  bool free;
  double lower;
  double upper;
};

struct FitModel {
  FitParameter lambda_z{5.3, true, 0.5, 20.0};
  FitParameter d_es{1.42, true, 0.0, 10.0};
  FitParameter delta_cap{1.55, true, 0.0, 10.0};
  FitParameter lambda_perp{0.2, false, 0.0, 2.0};
  std::vector<double> delta_perp;  // per defect, >= 0
  std::vector<double> offset;      // per defect, GHz
  FineStructureParams base;        // source of the fixed fields (d_gs, e_es_coeff, ...)

  FineStructureParams params() const;
  std::size_t free_global_count() const;
  // Throws InputError on bound violations or size mismatch with n_defects.
  void validate(std::size_t n_defects) const;
};

// The six excited eigenvalues at delta_perp (strain along x), ascending.
std::vector<double> predicted_lines(const FineStructureParams& p, double delta_perp);

// (pred + offset - meas) / sigma for every measured line, defect by defect.
std::vector<double> residuals(const FitModel& fm, std::span<const ObservedDefect> data);

struct FitOptions {
  int max_iterations = 3000;
  double simplex_tolerance = 1e-10;  // GHz, final simplex size
  double strain_max = 40.0;          // GHz, upper end of the per-defect strain search
  double strain_step = 0.25;         // GHz, coarse strain grid
  double local_window = 2.0;         // GHz, half-width of the local strain search
  int max_restarts = 5;
  Execution exec = Execution::parallel;
};

struct DefectFit {
  std::string id;
  double delta_perp;
  double offset;
  LineAssignment assignment;
};

struct FitResult {
  FitModel model;
  double rms_ghz = 0.0;
  double chi2 = 0.0;
  std::vector<DefectFit> defects;
  int iterations = 0;
  int restarts = 0;
  double final_simplex_size = 0.0;
  bool converged = false;
  std::vector<double> objective_log;  // best chi2 after each simplex iteration
};

// Nelder-Mead over the free globals; for every trial, each defect's strain is
// minimized by Brent search around a reference strain and the offset is
// solved in closed form for every order-preserving assignment. Reference
// strains come from a coarse scan over [0, strain_max] (the multi-start) and
// are refreshed after convergence, restarting when any of them moves.
//
// Throws InputError when the number of measured lines is below the number of
// free parameters.
FitResult fit(std::span<const ObservedDefect> data, const FitModel& init, const FitOptions& options = {});

// Six predicted lines per defect plus offset and optional Gaussian noise.
std::vector<ObservedDefect> synthesize_defects(const FineStructureParams& p, std::span<const double> strains,
                                               std::span<const double> offsets, double noise_sigma,
                                               std::uint64_t seed);

}  // namespace nvsim
