#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "perinet/common.hpp"
#include "perinet/network.hpp"

namespace perinet {

// Which time index selects the seasonal kernel in the lag sum: the target
// time whose intensity is being formed, or the source time of the past count
// being weighted.
enum class SeasonIndexing { by_target, by_source };

// Exponent family of the exponential-polynomial basis: rates (2m+1)/tau for
// m = 1..q, or m/tau.
enum class ExponentFamily { odd, all };

inline int exponent_rate(ExponentFamily family, int m) {
  return family == ExponentFamily::odd ? 2 * m + 1 : m;
}

// Dense periodic kernel stored lag by lag; lags beyond the stored horizon
// are zero. phi[v-1][k-1] is the d x d matrix at season v, lag k.
struct GeneralKernel {
  int p = 1;
  std::vector<std::vector<Matrix>> phi;
};

// Scalar pair sequences acting through the identity and the normalized
// adjacency: season v, lag k contributes alpha[v-1][k-1]*I + beta[v-1][k-1]*W.
struct NetworkKernel {
  int p = 1;
  NetworkSpec network;
  std::vector<std::vector<double>> alpha, beta;
};

// Finite mixture of geometric decays: season v, lag k is
// sum_m coef[v-1][m-1] * exp(-rate_m * k / tau). Infinite lag support with a
// Markov representation of depth q.
struct ExpPolyKernel {
  int p = 1;
  int q = 1;
  double tau = 1.0;
  ExponentFamily family = ExponentFamily::odd;
  std::vector<std::vector<Matrix>> coef;
};

// Exponential-polynomial kernel over a network whose loadings vary with a
// real-valued period through a truncated Fourier series. self[m-1] and
// neighbor[m-1] hold 1 + 2*harmonics coefficients each, ordered
// (constant, sin_1, cos_1, ..., sin_r, cos_r); the loading at time t is
// c0 + sum_j (c_sin_j sin(2 pi j t / period) + c_cos_j cos(2 pi j t / period)).
struct TrigExpPolyKernel {
  double period = 1.0;
  int harmonics = 1;
  int q = 1;
  double tau = 1.0;
  ExponentFamily family = ExponentFamily::odd;
  NetworkSpec network;
  std::vector<std::vector<double>> self, neighbor;
};

enum class KernelKind { general, network, exp_poly, trig_exp_poly };

// Evaluates the Fourier loading c(t) given packed coefficients.
double trig_loading(const std::vector<double>& coeffs, double t, double period);

class PeriodicKernel {
 public:
  explicit PeriodicKernel(GeneralKernel k);
  explicit PeriodicKernel(NetworkKernel k);
  explicit PeriodicKernel(ExpPolyKernel k);
  explicit PeriodicKernel(TrigExpPolyKernel k);

  KernelKind kind() const;
  int dimension() const { return d_; }
  bool strictly_periodic() const { return kind() != KernelKind::trig_exp_poly; }
  // Integer season count; throws for real-period kernels.
  int seasons() const;
  double period() const;

  // Kernel matrix applied at lag >= 1. For strictly periodic kernels t is
  // reduced to its season, so any representative of the season works; for
  // real-period kernels t is the literal time index.
  Matrix eval(std::int64_t t, int lag) const;

  // Lag beyond which entries are negligible: the stored horizon for lagwise
  // kernels, ceil(50 tau) for geometric-decay kernels.
  int effective_lags() const;

  // Entrywise bound A_k >= |phi_k| at every time, k = 1..effective_lags().
  std::vector<Matrix> domination_terms() const;

  const GeneralKernel& as_general() const;
  const NetworkKernel& as_network() const;
  const ExpPolyKernel& as_exp_poly() const;
  const TrigExpPolyKernel& as_trig() const;

 private:
  std::variant<GeneralKernel, NetworkKernel, ExpPolyKernel, TrigExpPolyKernel> body_;
  int d_ = 0;
};

// Per-season entrywise absolute lag sums sum_k |phi^(v)_k|. Geometric-decay
// kernels use the closed geometric form when every exponential in an entry
// carries the same sign, the truncated sum otherwise; for real-period kernels
// the result has one entry, an upper envelope over all times.
std::vector<Matrix> kernel_l1_norms(const PeriodicKernel& kernel);

}  // namespace perinet
