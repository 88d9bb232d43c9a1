#include "perinet/stability.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "perinet/stats.hpp"

namespace perinet {

namespace {

constexpr double kTiltClamp = 1e100;

void check_nonnegative_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw config_error(std::string(what) + ": matrix must be square and nonempty");
  }
  if (a.minCoeff() < 0.0) {
    throw config_error(std::string(what) + ": matrix must be entrywise nonnegative");
  }
}

double dense_radius(const Matrix& a) {
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw numeric_error("spectral_radius: dense eigensolver failed");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double spectral_radius(const Matrix& a, const SpectralOptions& opts) {
  check_nonnegative_square(a, "spectral_radius");
  const Eigen::Index n = a.rows();
  if (n == 1) return a(0, 0);
  if (a.isZero(0.0)) return 0.0;

  // Iterate on A + I: strictly positive iterates, unique dominant magnitude,
  // and for any positive x the ratios (Ax + x)_i / x_i bracket rho(A) + 1.
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  long stalled = 0;
  double last_width = std::numeric_limits<double>::infinity();
  for (long it = 0; it < opts.max_iterations; ++it) {
    Vector y = a * x + x;
    double u = 0.0, l = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y[i] / x[i];
      u = std::max(u, r);
      l = std::min(l, r);
    }
    lo = std::max(lo, l - 1.0);
    hi = std::min(hi, u - 1.0);
    if (hi - lo <= 2.0 * opts.tol) return std::max(0.0, 0.5 * (lo + hi));
    const double width = hi - lo;
    stalled = width >= (1.0 - 1e-6) * last_width ? stalled + 1 : 0;
    last_width = width;
    if (stalled > 2000) break;  // bracket is not shrinking, e.g. reducible blocks
    x = y / y.sum();
  }
  if (n <= 64) return dense_radius(a);
  throw numeric_error("spectral_radius: no convergence (bracket [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "] after iteration limit) and matrix too large for " +
                      "the dense fallback");
}

DominationSequence::DominationSequence(std::vector<Matrix> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw config_error("DominationSequence: need at least one term");
  dim_ = static_cast<int>(terms_.front().rows());
  for (const Matrix& t : terms_) {
    check_nonnegative_square(t, "DominationSequence");
    if (t.rows() != dim_) throw config_error("DominationSequence: terms must share one dimension");
  }
}

DominationSequence DominationSequence::from_kernel(const PeriodicKernel& kernel,
                                                   double lipschitz) {
  if (!(lipschitz > 0.0)) {
    throw config_error("DominationSequence: Lipschitz constant must be positive");
  }
  std::vector<Matrix> terms = kernel.domination_terms();
  for (Matrix& t : terms) t *= lipschitz;
  return DominationSequence(std::move(terms));
}

Matrix DominationSequence::total() const {
  Matrix s = Matrix::Zero(dim_, dim_);
  for (const Matrix& t : terms_) s += t;
  return s;
}

Matrix DominationSequence::tilted_total(double delta) const {
  Matrix s = Matrix::Zero(dim_, dim_);
  double tilt = 1.0;
  const double step = std::exp(delta);
  for (const Matrix& t : terms_) {
    tilt = std::min(tilt * step, kTiltClamp);
    s += tilt * t;
  }
  return s.cwiseMin(kTiltClamp);
}

namespace {

double tilted_radius(const DominationSequence& seq, double delta, const SpectralOptions& opts) {
  const Matrix s = seq.tilted_total(delta);
  if (s.maxCoeff() >= kTiltClamp) return std::numeric_limits<double>::infinity();
  return spectral_radius(s, opts);
}

// Largest delta in (0, cap) keeping the tilted sum subcritical; rho is
// nondecreasing in delta, so plain bisection applies.
std::pair<double, bool> bisect_tilt(const DominationSequence& seq, double cap, double tol,
                                    const SpectralOptions& opts) {
  const double probe = cap * (1.0 - 1e-9);
  if (tilted_radius(seq, probe, opts) < 1.0) return {cap, true};
  double lo = 0.0, hi = probe;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (tilted_radius(seq, mid, opts) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, false};
}

}  // namespace

DecayInfo classify_decay(const DominationSequence& seq, const ClassifyOptions& opts) {
  const SpectralOptions spectral;
  std::vector<double> ks, log_s;
  bool any_positive = false;
  for (int k = 1; k <= seq.horizon(); ++k) {
    const double s = seq.terms()[static_cast<std::size_t>(k - 1)].maxCoeff();
    if (s > 0.0) {
      any_positive = true;
      ks.push_back(static_cast<double>(k));
      log_s.push_back(std::log(s));
    }
  }
  DecayInfo info;
  if (!any_positive) {
    info.kind = DecayClass::exponential;
    info.rate = std::numeric_limits<double>::infinity();
    info.fit_r2 = 1.0;
    return info;
  }
  if (spectral_radius(seq.total(), spectral) >= 1.0) {
    throw config_error("classify_decay: domination sequence must be subcritical");
  }

  if (ks.size() >= 3) {
    const LinearFit exp_fit = fit_line(ks, log_s);
    if (exp_fit.r2 >= opts.r2_threshold && exp_fit.slope < 0.0) {
      info.kind = DecayClass::exponential;
      info.fit_r2 = exp_fit.r2;
      auto [delta, capped] = bisect_tilt(seq, -exp_fit.slope, opts.delta_tol, spectral);
      info.rate = delta;
      info.capped = capped;
      return info;
    }
    std::vector<double> log_k(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) log_k[i] = std::log(ks[i]);
    const LinearFit poly_fit = fit_line(log_k, log_s);
    if (poly_fit.r2 >= opts.r2_threshold && poly_fit.slope < -2.0) {
      // A_k ~ C k^{-2(1+beta)} guarantees moments up to order tied to beta.
      info.kind = DecayClass::polynomial;
      info.rate = -poly_fit.slope / 2.0 - 1.0;
      info.fit_r2 = poly_fit.r2;
      return info;
    }
    info.kind = DecayClass::unclassified;
    info.rate = std::numeric_limits<double>::quiet_NaN();
    info.fit_r2 = std::max(exp_fit.r2, poly_fit.r2);
    return info;
  }

  // One or two live lags: finite support decays faster than any exponential;
  // expand the tilt until the spectral radius crosses one, then bisect.
  info.kind = DecayClass::exponential;
  info.fit_r2 = 1.0;
  double cap = 1.0;
  while (cap < 1e3 && tilted_radius(seq, cap, spectral) < 1.0) cap *= 2.0;
  if (cap >= 1e3) {
    info.rate = cap;
    info.capped = true;
    return info;
  }
  auto [delta, capped] = bisect_tilt(seq, cap, opts.delta_tol, spectral);
  info.rate = delta;
  info.capped = capped;
  return info;
}

namespace {

StabilityVerdict make_global_verdict(const DominationSequence& seq,
                                     const StabilityOptions& opts) {
  StabilityVerdict verdict;
  verdict.mode = "global";
  verdict.margin = opts.margin;
  verdict.rho = spectral_radius(seq.total(), opts.spectral);
  verdict.stable = verdict.rho < 1.0 - opts.margin;
  if (opts.classify && verdict.rho < 1.0) {
    verdict.decay = classify_decay(seq);
  }
  return verdict;
}

}  // namespace

StabilityVerdict check_global(const PeriodicKernel& kernel, double lipschitz,
                              const StabilityOptions& opts) {
  return make_global_verdict(DominationSequence::from_kernel(kernel, lipschitz), opts);
}

StabilityVerdict check_global(const ModelSpec& spec, const StabilityOptions& opts) {
  return check_global(spec.kernel(), spec.jump_rate().lipschitz(), opts);
}

StabilityVerdict check_periodic(const PeriodicKernel& kernel, double lipschitz,
                                const StabilityOptions& opts) {
  if (!kernel.strictly_periodic()) {
    throw config_error("check_periodic: real-period kernels have no season-by-season form");
  }
  if (!(lipschitz > 0.0)) {
    throw config_error("check_periodic: Lipschitz constant must be positive");
  }
  const int p = kernel.seasons();
  const int d = kernel.dimension();
  int multiple = opts.lag_multiple;
  if (multiple < 0) throw config_error("check_periodic: lag multiple must be >= 0");
  if (multiple == 0) {
    multiple = std::max(1, (kernel.effective_lags() + p - 1) / p);
  }
  const int depth = multiple * p;
  const Eigen::Index n = static_cast<Eigen::Index>(d) * depth;

  // Companion block matrix per season: top block row carries the absolute
  // lag matrices, the subdiagonal shifts history down by one step.
  Matrix product = Matrix::Identity(n, n);
  for (int v = 1; v <= p; ++v) {
    Matrix gamma = Matrix::Zero(n, n);
    for (int k = 1; k <= depth; ++k) {
      gamma.block(0, static_cast<Eigen::Index>(d) * (k - 1), d, d) =
          lipschitz * kernel.eval(v, k).cwiseAbs();
    }
    if (depth > 1) {
      gamma.block(d, 0, n - d, n - d).setIdentity();
    }
    product = gamma * product;
  }

  StabilityVerdict verdict;
  verdict.mode = "periodic";
  verdict.margin = opts.margin;
  verdict.rho = spectral_radius(product, opts.spectral);
  verdict.stable = verdict.rho < 1.0 - opts.margin;
  return verdict;
}

StabilityVerdict check_periodic(const ModelSpec& spec, const StabilityOptions& opts) {
  return check_periodic(spec.kernel(), spec.jump_rate().lipschitz(), opts);
}

std::vector<Vector> convolution_bound(const DominationSequence& seq,
                                      const std::vector<Vector>& driver) {
  if (driver.empty()) throw config_error("convolution_bound: empty driver sequence");
  const int d = seq.dimension();
  for (const Vector& k : driver) {
    if (static_cast<int>(k.size()) != d) {
      throw config_error("convolution_bound: driver width must match the domination dimension");
    }
    if (k.minCoeff() < 0.0) {
      throw config_error("convolution_bound: driver must be nonnegative");
    }
  }
  // The bound solves the recursion equality b_t = driver_t + sum A_k b_{t-k},
  // which expands to (sum of convolution powers) * driver.
  std::vector<Vector> bound(driver.size());
  for (std::size_t t = 0; t < driver.size(); ++t) {
    Vector b = driver[t];
    const int reach = std::min<int>(seq.horizon(), static_cast<int>(t));
    for (int k = 1; k <= reach; ++k) {
      b += seq.terms()[static_cast<std::size_t>(k - 1)] * bound[t - static_cast<std::size_t>(k)];
    }
    bound[t] = std::move(b);
  }
  return bound;
}

Vector convolution_bound_constant(const DominationSequence& seq, const Vector& driver) {
  const int d = seq.dimension();
  if (static_cast<int>(driver.size()) != d) {
    throw config_error("convolution_bound: driver width must match the domination dimension");
  }
  if (driver.minCoeff() < 0.0) {
    throw config_error("convolution_bound: driver must be nonnegative");
  }
  const Matrix s = seq.total();
  if (spectral_radius(s) >= 1.0) {
    throw config_error("convolution_bound: domination sequence must be subcritical");
  }
  return (Matrix::Identity(d, d) - s).partialPivLu().solve(driver);
}

}  // namespace perinet
