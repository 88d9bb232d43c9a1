#include "perinet/kernel_approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "perinet/optim.hpp"
#include "perinet/stability.hpp"

namespace perinet {

namespace {

// Objective sums run to max(50 tau, last lag where the target is still
// above 1e-12); beyond that both target and basis tails are negligible.
int objective_horizon(const std::vector<double>& target, double tau) {
  int last = 0;
  for (int k = static_cast<int>(target.size()); k >= 1; --k) {
    if (std::fabs(target[static_cast<std::size_t>(k - 1)]) >= 1e-12) {
      last = k;
      break;
    }
  }
  return std::max(static_cast<int>(std::ceil(50.0 * tau)), last);
}

Matrix basis_matrix(int horizon, double tau, int q, ExponentFamily family) {
  Matrix basis(horizon, q);
  for (int m = 1; m <= q; ++m) {
    const double r = std::exp(-static_cast<double>(exponent_rate(family, m)) / tau);
    double value = 1.0;
    for (int k = 1; k <= horizon; ++k) {
      value *= r;
      basis(k - 1, m - 1) = value;
    }
  }
  return basis;
}

Vector padded(const std::vector<double>& target, int horizon) {
  Vector out = Vector::Zero(horizon);
  const int n = std::min(horizon, static_cast<int>(target.size()));
  for (int k = 0; k < n; ++k) out[k] = target[static_cast<std::size_t>(k)];
  return out;
}

void check_inputs(const std::vector<double>& target, double tau, int q) {
  if (!(tau > 0.0)) throw config_error("kernel approximation: tau must be positive");
  if (q < 1) throw config_error("kernel approximation: q must be >= 1");
  for (double v : target) {
    if (!std::isfinite(v)) {
      throw config_error("kernel approximation: target entries must be finite");
    }
  }
}

}  // namespace

double select_tau(double characteristic_horizon) {
  if (!(characteristic_horizon > 0.0)) {
    throw config_error("select_tau: characteristic horizon must be positive");
  }
  return 0.6 * characteristic_horizon;
}

ProjectionResult l2_project(const std::vector<double>& target, double tau, int q,
                            ExponentFamily family) {
  check_inputs(target, tau, q);
  Matrix gram(q, q);
  Vector moments = Vector::Zero(q);
  for (int m = 1; m <= q; ++m) {
    for (int n = 1; n <= q; ++n) {
      // sum_{k>=1} r^k = r / (1 - r), written with expm1 to survive r near 1.
      const double x =
          static_cast<double>(exponent_rate(family, m) + exponent_rate(family, n)) / tau;
      gram(m - 1, n - 1) = std::exp(-x) / -std::expm1(-x);
    }
    const double rm = std::exp(-static_cast<double>(exponent_rate(family, m)) / tau);
    long double acc = 0.0L;
    double weight = 1.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
      weight *= rm;
      acc += static_cast<long double>(target[k]) * weight;
    }
    moments[m - 1] = static_cast<double>(acc);
  }

  Eigen::JacobiSVD<Matrix> svd(gram);
  const double s_max = svd.singularValues()(0);
  const double s_min = svd.singularValues()(q - 1);
  ProjectionResult out;
  out.condition = s_min > 0.0 ? s_max / s_min : std::numeric_limits<double>::infinity();
  Matrix system = gram;
  if (out.condition > 1e12) {
    out.ridged = true;
    system.diagonal().array() += 1e-10 * gram.trace();
  }
  out.coeffs = system.ldlt().solve(moments);
  return out;
}

RefineResult l1_refine(const std::vector<double>& target, double tau, int q,
                       ExponentFamily family, const Vector& init) {
  check_inputs(target, tau, q);
  if (init.size() != q) {
    throw config_error("l1_refine: init needs one coefficient per exponential");
  }
  if (!init.allFinite()) throw config_error("l1_refine: init coefficients must be finite");

  const int horizon = objective_horizon(target, tau);
  const Matrix basis = basis_matrix(horizon, tau, q, family);
  const Vector truth = padded(target, horizon);
  const auto objective = [&](const Vector& nu) { return (truth - basis * nu).cwiseAbs().sum(); };

  SimplexResult res = minimize_simplex(objective, init, SimplexOptions{});
  RefineResult out;
  out.coeffs = std::move(res.x);
  out.l1_error = res.value;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

double l1_distance(const std::vector<double>& target, double tau, int q, ExponentFamily family,
                   const Vector& coeffs) {
  check_inputs(target, tau, q);
  if (coeffs.size() != q) {
    throw config_error("l1_distance: need one coefficient per exponential");
  }
  const int horizon = objective_horizon(target, tau);
  const Matrix basis = basis_matrix(horizon, tau, q, family);
  return (padded(target, horizon) - basis * coeffs).cwiseAbs().sum();
}

std::pair<PeriodicKernel, ApproximationReport> approximate_kernel(const PeriodicKernel& source,
                                                                  const ApproxOptions& opts) {
  if (!source.strictly_periodic()) {
    throw config_error(
        "approximate_kernel: real-period kernels already have geometric decay; "
        "only strictly periodic kernels are approximated");
  }
  if (!(opts.tau > 0.0)) throw config_error("approximate_kernel: tau must be positive");
  if (opts.q < 1) throw config_error("approximate_kernel: q must be >= 1");
  if (!(opts.lipschitz > 0.0)) {
    throw config_error("approximate_kernel: lipschitz constant must be positive");
  }

  const int p = source.seasons();
  const int d = source.dimension();
  const int reach = source.effective_lags();

  ExpPolyKernel approx;
  approx.p = p;
  approx.q = opts.q;
  approx.tau = opts.tau;
  approx.family = opts.family;
  approx.coef.assign(static_cast<std::size_t>(p),
                     std::vector<Matrix>(static_cast<std::size_t>(opts.q), Matrix::Zero(d, d)));

  ApproximationReport report;
  std::vector<std::vector<std::vector<double>>> targets(static_cast<std::size_t>(p));

  for (int v = 1; v <= p; ++v) {
    std::vector<Matrix> lags;
    lags.reserve(static_cast<std::size_t>(reach));
    for (int k = 1; k <= reach; ++k) lags.push_back(source.eval(v, k));

    auto& season_targets = targets[static_cast<std::size_t>(v - 1)];
    season_targets.assign(static_cast<std::size_t>(d * d), {});
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        std::vector<double>& entry = season_targets[static_cast<std::size_t>(i * d + j)];
        entry.resize(static_cast<std::size_t>(reach));
        for (int k = 1; k <= reach; ++k) {
          entry[static_cast<std::size_t>(k - 1)] = lags[static_cast<std::size_t>(k - 1)](i, j);
        }

        ProjectionResult proj = l2_project(entry, opts.tau, opts.q, opts.family);
        report.max_condition = std::max(report.max_condition, proj.condition);
        report.any_ridged = report.any_ridged || proj.ridged;
        Vector nu = std::move(proj.coeffs);
        if (opts.refine) nu = l1_refine(entry, opts.tau, opts.q, opts.family, nu).coeffs;
        for (int m = 1; m <= opts.q; ++m) {
          approx.coef[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(m - 1)](i, j) =
              nu[m - 1];
        }
      }
    }
  }

  PeriodicKernel result{approx};

  if (opts.guard) {
    StabilityOptions stab;
    stab.classify = false;
    report.rho_target = check_global(source, opts.lipschitz, stab).rho;
    report.rho_approx = check_global(result, opts.lipschitz, stab).rho;
    if (report.rho_target < 1.0 && report.rho_approx >= 1.0) {
      report.shrunk = true;
      report.shrink_factor = report.rho_target / report.rho_approx;
      for (auto& season : approx.coef) {
        for (Matrix& g : season) g *= report.shrink_factor;
      }
      result = PeriodicKernel{approx};
    }
  }

  report.season_error.assign(static_cast<std::size_t>(p), Matrix::Zero(d, d));
  report.max_error = Matrix::Zero(d, d);
  report.total_error = Matrix::Zero(d, d);
  for (int v = 1; v <= p; ++v) {
    Matrix& err = report.season_error[static_cast<std::size_t>(v - 1)];
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        Vector nu(opts.q);
        for (int m = 1; m <= opts.q; ++m) {
          nu[m - 1] =
              approx.coef[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(m - 1)](i, j);
        }
        err(i, j) = l1_distance(targets[static_cast<std::size_t>(v - 1)]
                                       [static_cast<std::size_t>(i * d + j)],
                                opts.tau, opts.q, opts.family, nu);
      }
    }
    report.max_error = report.max_error.cwiseMax(err);
    report.total_error += err;
  }

  return {std::move(result), std::move(report)};
}

}  // namespace perinet
