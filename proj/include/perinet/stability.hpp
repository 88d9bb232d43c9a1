#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perinet/common.hpp"
#include "perinet/model.hpp"

namespace perinet {

struct SpectralOptions {
  double tol = 1e-10;
  long max_iterations = 100000;
};

// Largest eigenvalue magnitude of a nonnegative square matrix. Power
// iteration on A + I with two-sided ratio brackets; restarts with a fresh
// positive vector when the bracket stalls, then falls back to a dense
// eigensolver for matrices up to 64 x 64. Throws numeric_error with iterate
// diagnostics if nothing converges.
double spectral_radius(const Matrix& a, const SpectralOptions& opts = {});

// Entrywise nonnegative bounds A_1..A_K with |contribution at lag k| <= A_k.
// Dense storage; geometric tails beyond the horizon are negligible by
// construction of the horizon.
class DominationSequence {
 public:
  explicit DominationSequence(std::vector<Matrix> terms);
  // A_k = lipschitz * max over seasons of |kernel at lag k| entrywise.
  static DominationSequence from_kernel(const PeriodicKernel& kernel, double lipschitz);

  int dimension() const { return dim_; }
  int horizon() const { return static_cast<int>(terms_.size()); }
  const std::vector<Matrix>& terms() const { return terms_; }
  // S_A = sum_k A_k.
  Matrix total() const;
  // sum_k e^{delta k} A_k; entries are clamped into [0, 1e100] so callers
  // can treat an overflowing tilt as unstable.
  Matrix tilted_total(double delta) const;

 private:
  std::vector<Matrix> terms_;
  int dim_ = 0;
};

enum class DecayClass { exponential, polynomial, unclassified };

struct DecayInfo {
  DecayClass kind = DecayClass::unclassified;
  // Exponential: largest delta with rho(sum_k e^{delta k} A_k) < 1, +inf for
  // an all-zero sequence. Polynomial: beta with A_k ~ C k^{-2(1+beta)}.
  double rate = 0.0;
  // True when the tilt search hit the upper limit implied by the fit.
  bool capped = false;
  double fit_r2 = 0.0;
};

struct ClassifyOptions {
  double r2_threshold = 0.99;
  double delta_tol = 1e-4;
};

// Requires rho(S_A) < 1. Classifies the decay profile of the domination
// sequence and, for exponential decay, finds the strongest admissible
// exponential tilt by bisection.
DecayInfo classify_decay(const DominationSequence& seq, const ClassifyOptions& opts = {});

struct StabilityOptions {
  // Verdicts require rho < 1 - margin.
  double margin = 0.0;
  // Lag-multiple for the season-by-season check: the companion blocks cover
  // m * seasons lags. Zero picks the smallest multiple covering the kernel.
  int lag_multiple = 0;
  bool classify = true;
  SpectralOptions spectral;
};

struct StabilityVerdict {
  std::string mode;
  double rho = 0.0;
  double margin = 0.0;
  bool stable = false;
  std::optional<DecayInfo> decay;
};

// Time-uniform condition: rho(sum_k A_k) < 1 - margin with
// A_k = L * max_v |phi^(v)_k|. Sufficient for every season pattern.
StabilityVerdict check_global(const PeriodicKernel& kernel, double lipschitz,
                              const StabilityOptions& opts = {});
StabilityVerdict check_global(const ModelSpec& spec, const StabilityOptions& opts = {});

// Sharper season-by-season condition: spectral radius of the product of the
// per-season companion matrices built from L * |phi^(v)_k|, lags up to
// lag_multiple * seasons. Real-period kernels are rejected.
StabilityVerdict check_periodic(const PeriodicKernel& kernel, double lipschitz,
                                const StabilityOptions& opts = {});
StabilityVerdict check_periodic(const ModelSpec& spec, const StabilityOptions& opts = {});

// Pointwise solution bound: with |x_t| <= driver_t + sum_k A_k |x_{t-k}|
// (zero before t = 0), returns the sequence of bounds for each driver step.
std::vector<Vector> convolution_bound(const DominationSequence& seq,
                                      const std::vector<Vector>& driver);

// Stationary version for a constant driver: (I - S_A)^{-1} * driver.
// Requires rho(S_A) < 1.
Vector convolution_bound_constant(const DominationSequence& seq, const Vector& driver);

}  // namespace perinet
