#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perinet/model.hpp"
#include "perinet/optim.hpp"
#include "perinet/serialize.hpp"

namespace perinet {

// Parametrizations the fitter understands. All geometric layouts share the
// decay grid (q, tau, family); what varies is how the loading matrices are
// built from the packed vector.
enum class LayoutKind {
  // Per season: one shared baseline scalar and q dense d x d matrices.
  general_exp_poly,
  // Per season: one shared baseline scalar and q (self, neighbor) pairs
  // acting through I and the normalized adjacency.
  network_exp_poly,
  // Fourier-parametrized network model with a real period: per-node baseline
  // loadings plus scalar self/neighbor loadings, each expanded in
  // (1, sin, cos, ...) of the period.
  trig_network,
  // Finite-lag network regression (per-node baseline, scalar self/neighbor
  // coefficient per stored lag).
  lagged_network,
};

// Maps a packed parameter vector to a ModelSpec and back. Matrices are
// flattened column-major. Block order per season: baseline first, then
// loadings (self before neighbor where both exist).
struct ParamLayout {
  LayoutKind kind = LayoutKind::general_exp_poly;
  int seasons = 1;
  int dimension = 1;
  int q = 1;
  double tau = 1.0;
  ExponentFamily family = ExponentFamily::odd;
  int lags = 1;
  int harmonics = 1;
  double period = 1.0;
  std::optional<NetworkSpec> network;
  SeasonIndexing indexing = SeasonIndexing::by_target;
  JumpRate rate = JumpRate::identity();
  // Box defining the compact feasible set.
  double coef_bound = 50.0;
  double baseline_bound = 50.0;
  // Pins every kernel coefficient at zero; only baselines move.
  bool freeze_kernel = false;

  static ParamLayout general(int seasons, int dimension, int q, double tau,
                             ExponentFamily family = ExponentFamily::odd,
                             SeasonIndexing indexing = SeasonIndexing::by_target,
                             JumpRate rate = JumpRate::identity());
  static ParamLayout network_poly(int seasons, NetworkSpec net, int q, double tau,
                                  ExponentFamily family = ExponentFamily::odd,
                                  SeasonIndexing indexing = SeasonIndexing::by_target,
                                  JumpRate rate = JumpRate::identity());
  static ParamLayout trig(NetworkSpec net, double period, int harmonics, int q, double tau,
                          ExponentFamily family = ExponentFamily::odd,
                          JumpRate rate = JumpRate::identity());
  static ParamLayout lagged(NetworkSpec net, int lags, int seasons = 1,
                            JumpRate rate = JumpRate::identity());

  // Packed vector length.
  int size() const;
  // Parameters free to move (excludes frozen coefficients).
  int free_parameters() const;
  // Per-season block length; zero when the layout has no season blocks.
  int season_block() const;
  BoxBounds bounds() const;

  void validate() const;
  Vector pack(const ModelSpec& spec) const;
  ModelSpec unpack(const Vector& gamma) const;
};

const char* kind_name(LayoutKind kind);
LayoutKind kind_from_name(const std::string& name);

Json layout_to_json(const ParamLayout& layout);
ParamLayout layout_from_json(const Json& j);

// Poisson log-likelihood sum_t sum_i [Y log lambda - lambda] by the full lag
// sum; O(T^2 d^2) for dense kernels. Returns -inf when some lambda is zero
// (or negative, possible under the identity rate) against a positive count.
// normalized divides by the number of periods covered.
double log_likelihood(const CountSeries& data, const ModelSpec& spec, bool normalized = false);

// Same value through the recursive state, O(q T d^2); geometric-decay
// kernels only. States start at zero before the first observation.
double markov_log_likelihood(const CountSeries& data, const ModelSpec& spec,
                             bool normalized = false);

// Season-v slice of the likelihood; the slices sum to the total exactly.
// Only target-season indexing decomposes this way.
double seasonal_log_likelihood(const CountSeries& data, const ModelSpec& spec, int season);

// Gradient of the unnormalized log-likelihood at the packed point. analytic
// (when non-null) reports whether the chain-rule path was used; table-based
// jump rates fall back to central finite differences.
Vector loglik_gradient(const CountSeries& data, const ParamLayout& layout, const Vector& gamma,
                       bool* analytic = nullptr);

struct FitOptions {
  MinimizeOptions optimizer;
  int threads = 1;
  // Starting point override; empty uses zero coefficients and the
  // rate-inverted grand mean as baseline.
  std::optional<Vector> init;
};

struct SeasonFit {
  int season = 0;
  double loglik = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct FitResult {
  ParamLayout layout;
  Vector gamma;
  double loglik = 0.0;
  double init_loglik = 0.0;
  int parameter_count = 0;
  std::int64_t observation_count = 0;
  bool converged = false;
  bool gradient_analytic = false;
  // One entry per season when the likelihood factorized, else empty.
  std::vector<SeasonFit> seasons;
  std::optional<ModelSpec> model;
};

// Box-projected quasi-Newton ascent from zero coefficients and the
// rate-inverted grand mean. Season blocks are fit independently (optionally
// in parallel) whenever the likelihood factorizes; otherwise one joint fit.
FitResult fit_mle(const CountSeries& data, const ParamLayout& layout,
                  const FitOptions& options = {});

struct ReconstructedKernels {
  int seasons = 1;
  int lags = 0;
  // curves[v-1][k-1]: kernel matrix at season v, lag k.
  std::vector<std::vector<Matrix>> matrices;
  // Scalar self/neighbor curves where the layout has them, else empty.
  std::vector<std::vector<double>> self, neighbor;
};

// Lag curves implied by the fitted coefficients, sampled at k = 1..lags
// (0 picks the kernel's effective horizon). Real-period layouts are
// rejected; their kernel is already explicit in the fitted model.
ReconstructedKernels reconstruct_kernels(const FitResult& fit, int lags = 0);

Json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const Json& j);

}  // namespace perinet
