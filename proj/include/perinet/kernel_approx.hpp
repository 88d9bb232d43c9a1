#pragma once

#include <utility>
#include <vector>

#include "perinet/kernel.hpp"

namespace perinet {

// Decay scale from the characteristic horizon of the target kernel (the lag
// span carrying its mass): tau = (3/5) * horizon.
double select_tau(double characteristic_horizon);

struct ProjectionResult {
  Vector coeffs;
  double condition = 0.0;
  bool ridged = false;
};

// Least squares fit of sum_m nu_m e^{-rate_m k / tau} to the target sequence
// (zero beyond its length) over all lags k >= 1. The normal equations use
// the closed geometric form of the basis Gram matrix; when its condition
// number exceeds 1e12 a ridge of 1e-10 * trace is added and flagged.
ProjectionResult l2_project(const std::vector<double>& target, double tau, int q,
                            ExponentFamily family);

struct RefineResult {
  Vector coeffs;
  double l1_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Polishes coefficients toward the truncated absolute-error objective
// sum_k |target_k - approx_k| with a derivative-free simplex search started
// at init; the result never scores worse than init.
RefineResult l1_refine(const std::vector<double>& target, double tau, int q,
                       ExponentFamily family, const Vector& init);

// Truncated absolute error of a coefficient vector against the target.
double l1_distance(const std::vector<double>& target, double tau, int q, ExponentFamily family,
                   const Vector& coeffs);

struct ApproxOptions {
  double tau = 1.0;
  int q = 1;
  ExponentFamily family = ExponentFamily::odd;
  // Run the absolute-error polish after the least-squares projection.
  bool refine = true;
  // Shrink the approximant back to the target's global spectral radius if
  // the approximation pushed it across 1.
  bool guard = true;
  double lipschitz = 1.0;
};

struct ApproximationReport {
  // Entrywise absolute lag-sum distance per season, plus the entrywise max
  // and sum across seasons (the two transfer-bound controls).
  std::vector<Matrix> season_error;
  Matrix max_error;
  Matrix total_error;
  double max_condition = 0.0;
  bool any_ridged = false;
  double rho_target = 0.0;
  double rho_approx = 0.0;
  bool shrunk = false;
  double shrink_factor = 1.0;
};

// Entry-by-entry approximation of a strictly periodic kernel by a
// geometric-decay kernel with the given basis.
std::pair<PeriodicKernel, ApproximationReport> approximate_kernel(const PeriodicKernel& source,
                                                                  const ApproxOptions& opts);

}  // namespace perinet
