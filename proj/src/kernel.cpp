#include "perinet/kernel.hpp"

#include <cmath>
#include <numbers>

namespace perinet {

namespace {

void check_season_count(int p) {
  if (p < 1) throw config_error("PeriodicKernel: season count must be >= 1");
}

int validate_general(const GeneralKernel& k) {
  check_season_count(k.p);
  if (static_cast<int>(k.phi.size()) != k.p) {
    throw config_error("PeriodicKernel: need one lag list per season");
  }
  int d = 0;
  for (const auto& season : k.phi) {
    for (const Matrix& m : season) {
      if (m.rows() != m.cols()) throw config_error("PeriodicKernel: lag matrices must be square");
      if (d == 0) d = static_cast<int>(m.rows());
      if (static_cast<int>(m.rows()) != d) {
        throw config_error("PeriodicKernel: lag matrices must share one dimension");
      }
    }
  }
  if (d == 0) throw config_error("PeriodicKernel: at least one lag matrix required");
  return d;
}

int validate_network(const NetworkKernel& k) {
  check_season_count(k.p);
  if (static_cast<int>(k.alpha.size()) != k.p || static_cast<int>(k.beta.size()) != k.p) {
    throw config_error("PeriodicKernel: need alpha and beta sequences for every season");
  }
  for (int v = 0; v < k.p; ++v) {
    if (k.alpha[v].size() != k.beta[v].size()) {
      throw config_error("PeriodicKernel: alpha and beta lag counts differ in season " +
                         std::to_string(v + 1));
    }
  }
  return k.network.size();
}

void check_decay(int q, double tau) {
  if (q < 1) throw config_error("PeriodicKernel: exponential count q must be >= 1");
  if (!(tau > 0.0)) throw config_error("PeriodicKernel: decay scale tau must be positive");
}

int validate_exp_poly(const ExpPolyKernel& k) {
  check_season_count(k.p);
  check_decay(k.q, k.tau);
  if (static_cast<int>(k.coef.size()) != k.p) {
    throw config_error("PeriodicKernel: need one coefficient list per season");
  }
  int d = 0;
  for (const auto& season : k.coef) {
    if (static_cast<int>(season.size()) != k.q) {
      throw config_error("PeriodicKernel: every season needs q coefficient matrices");
    }
    for (const Matrix& m : season) {
      if (m.rows() != m.cols()) throw config_error("PeriodicKernel: coefficients must be square");
      if (d == 0) d = static_cast<int>(m.rows());
      if (static_cast<int>(m.rows()) != d) {
        throw config_error("PeriodicKernel: coefficients must share one dimension");
      }
    }
  }
  if (d == 0) throw config_error("PeriodicKernel: at least one coefficient matrix required");
  return d;
}

int validate_trig(const TrigExpPolyKernel& k) {
  if (!(k.period > 0.0)) throw config_error("PeriodicKernel: period must be positive");
  if (k.harmonics < 0) throw config_error("PeriodicKernel: harmonic order must be >= 0");
  check_decay(k.q, k.tau);
  const std::size_t want = 1 + 2 * static_cast<std::size_t>(k.harmonics);
  if (static_cast<int>(k.self.size()) != k.q || static_cast<int>(k.neighbor.size()) != k.q) {
    throw config_error("PeriodicKernel: need self and neighbor loadings for each exponential");
  }
  for (int m = 0; m < k.q; ++m) {
    if (k.self[m].size() != want || k.neighbor[m].size() != want) {
      throw config_error("PeriodicKernel: each loading needs 1 + 2*harmonics coefficients");
    }
  }
  return k.network.size();
}

double decay_factor(ExponentFamily family, int m, double tau) {
  return std::exp(-static_cast<double>(exponent_rate(family, m)) / tau);
}

// Envelope sup_t |c(t)| <= |c0| + sum_j (|c_sin_j| + |c_cos_j|).
double trig_envelope(const std::vector<double>& coeffs) {
  double bound = std::fabs(coeffs[0]);
  for (std::size_t j = 1; j < coeffs.size(); ++j) bound += std::fabs(coeffs[j]);
  return bound;
}

int geometric_horizon(double tau) {
  return std::max(10, static_cast<int>(std::ceil(50.0 * tau)));
}

}  // namespace

double trig_loading(const std::vector<double>& coeffs, double t, double period) {
  double c = coeffs[0];
  const int r = static_cast<int>((coeffs.size() - 1) / 2);
  for (int j = 1; j <= r; ++j) {
    const double angle = 2.0 * std::numbers::pi * j * t / period;
    c += coeffs[2 * j - 1] * std::sin(angle) + coeffs[2 * j] * std::cos(angle);
  }
  return c;
}

PeriodicKernel::PeriodicKernel(GeneralKernel k) : body_(std::move(k)) {
  d_ = validate_general(std::get<GeneralKernel>(body_));
}
PeriodicKernel::PeriodicKernel(NetworkKernel k) : body_(std::move(k)) {
  d_ = validate_network(std::get<NetworkKernel>(body_));
}
PeriodicKernel::PeriodicKernel(ExpPolyKernel k) : body_(std::move(k)) {
  d_ = validate_exp_poly(std::get<ExpPolyKernel>(body_));
}
PeriodicKernel::PeriodicKernel(TrigExpPolyKernel k) : body_(std::move(k)) {
  d_ = validate_trig(std::get<TrigExpPolyKernel>(body_));
}

KernelKind PeriodicKernel::kind() const {
  return static_cast<KernelKind>(body_.index());
}

int PeriodicKernel::seasons() const {
  switch (kind()) {
    case KernelKind::general:
      return std::get<GeneralKernel>(body_).p;
    case KernelKind::network:
      return std::get<NetworkKernel>(body_).p;
    case KernelKind::exp_poly:
      return std::get<ExpPolyKernel>(body_).p;
    case KernelKind::trig_exp_poly:
      throw config_error("PeriodicKernel: real-period kernel has no integer season count");
  }
  return 1;
}

double PeriodicKernel::period() const {
  if (kind() == KernelKind::trig_exp_poly) return std::get<TrigExpPolyKernel>(body_).period;
  return static_cast<double>(seasons());
}

Matrix PeriodicKernel::eval(std::int64_t t, int lag) const {
  if (lag < 1) throw config_error("PeriodicKernel: lag must be >= 1");
  switch (kind()) {
    case KernelKind::general: {
      const auto& k = std::get<GeneralKernel>(body_);
      const auto& lags = k.phi[static_cast<std::size_t>(season_of(t, k.p) - 1)];
      if (static_cast<std::size_t>(lag) > lags.size()) return Matrix::Zero(d_, d_);
      return lags[static_cast<std::size_t>(lag - 1)];
    }
    case KernelKind::network: {
      const auto& k = std::get<NetworkKernel>(body_);
      const std::size_t v = static_cast<std::size_t>(season_of(t, k.p) - 1);
      if (static_cast<std::size_t>(lag) > k.alpha[v].size()) return Matrix::Zero(d_, d_);
      const double a = k.alpha[v][static_cast<std::size_t>(lag - 1)];
      const double b = k.beta[v][static_cast<std::size_t>(lag - 1)];
      Matrix out = b * k.network.weights();
      out.diagonal().array() += a;
      return out;
    }
    case KernelKind::exp_poly: {
      const auto& k = std::get<ExpPolyKernel>(body_);
      const auto& coef = k.coef[static_cast<std::size_t>(season_of(t, k.p) - 1)];
      Matrix out = Matrix::Zero(d_, d_);
      for (int m = 1; m <= k.q; ++m) {
        out += coef[static_cast<std::size_t>(m - 1)] *
               std::pow(decay_factor(k.family, m, k.tau), lag);
      }
      return out;
    }
    case KernelKind::trig_exp_poly: {
      const auto& k = std::get<TrigExpPolyKernel>(body_);
      const double td = static_cast<double>(t);
      Matrix out = Matrix::Zero(d_, d_);
      for (int m = 1; m <= k.q; ++m) {
        const double decay = std::pow(decay_factor(k.family, m, k.tau), lag);
        const double a = trig_loading(k.self[static_cast<std::size_t>(m - 1)], td, k.period);
        const double b = trig_loading(k.neighbor[static_cast<std::size_t>(m - 1)], td, k.period);
        out += decay * b * k.network.weights();
        out.diagonal().array() += decay * a;
      }
      return out;
    }
  }
  return Matrix::Zero(d_, d_);
}

int PeriodicKernel::effective_lags() const {
  switch (kind()) {
    case KernelKind::general: {
      const auto& k = std::get<GeneralKernel>(body_);
      std::size_t horizon = 0;
      for (const auto& season : k.phi) horizon = std::max(horizon, season.size());
      return static_cast<int>(horizon);
    }
    case KernelKind::network: {
      const auto& k = std::get<NetworkKernel>(body_);
      std::size_t horizon = 0;
      for (const auto& season : k.alpha) horizon = std::max(horizon, season.size());
      return static_cast<int>(horizon);
    }
    case KernelKind::exp_poly:
      return geometric_horizon(std::get<ExpPolyKernel>(body_).tau);
    case KernelKind::trig_exp_poly:
      return geometric_horizon(std::get<TrigExpPolyKernel>(body_).tau);
  }
  return 0;
}

std::vector<Matrix> PeriodicKernel::domination_terms() const {
  const int horizon = effective_lags();
  std::vector<Matrix> terms(static_cast<std::size_t>(horizon), Matrix::Zero(d_, d_));
  if (kind() == KernelKind::trig_exp_poly) {
    const auto& k = std::get<TrigExpPolyKernel>(body_);
    for (int m = 1; m <= k.q; ++m) {
      const double rate = decay_factor(k.family, m, k.tau);
      const double a = trig_envelope(k.self[static_cast<std::size_t>(m - 1)]);
      const double b = trig_envelope(k.neighbor[static_cast<std::size_t>(m - 1)]);
      double decay = 1.0;
      for (int lag = 1; lag <= horizon; ++lag) {
        decay *= rate;
        terms[static_cast<std::size_t>(lag - 1)] += decay * b * k.network.weights();
        terms[static_cast<std::size_t>(lag - 1)].diagonal().array() += decay * a;
      }
    }
    return terms;
  }
  const int p = seasons();
  for (int lag = 1; lag <= horizon; ++lag) {
    Matrix& bound = terms[static_cast<std::size_t>(lag - 1)];
    for (int v = 1; v <= p; ++v) {
      bound = bound.cwiseMax(eval(v, lag).cwiseAbs());
    }
  }
  return terms;
}

const GeneralKernel& PeriodicKernel::as_general() const {
  if (kind() != KernelKind::general) throw config_error("PeriodicKernel: not a lagwise kernel");
  return std::get<GeneralKernel>(body_);
}
const NetworkKernel& PeriodicKernel::as_network() const {
  if (kind() != KernelKind::network) throw config_error("PeriodicKernel: not a network kernel");
  return std::get<NetworkKernel>(body_);
}
const ExpPolyKernel& PeriodicKernel::as_exp_poly() const {
  if (kind() != KernelKind::exp_poly) {
    throw config_error("PeriodicKernel: not an exponential-polynomial kernel");
  }
  return std::get<ExpPolyKernel>(body_);
}
const TrigExpPolyKernel& PeriodicKernel::as_trig() const {
  if (kind() != KernelKind::trig_exp_poly) {
    throw config_error("PeriodicKernel: not a real-period kernel");
  }
  return std::get<TrigExpPolyKernel>(body_);
}

std::vector<Matrix> kernel_l1_norms(const PeriodicKernel& kernel) {
  const int d = kernel.dimension();
  if (kernel.kind() == KernelKind::exp_poly) {
    const auto& k = kernel.as_exp_poly();
    std::vector<Matrix> norms(static_cast<std::size_t>(k.p), Matrix::Zero(d, d));
    std::vector<double> geo(static_cast<std::size_t>(k.q));
    std::vector<double> rates(static_cast<std::size_t>(k.q));
    for (int m = 1; m <= k.q; ++m) {
      const double r = decay_factor(k.family, m, k.tau);
      rates[static_cast<std::size_t>(m - 1)] = r;
      geo[static_cast<std::size_t>(m - 1)] = r / (1.0 - r);
    }
    const int horizon = kernel.effective_lags();
    for (int v = 0; v < k.p; ++v) {
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          bool pos = true, neg = true;
          for (int m = 0; m < k.q; ++m) {
            const double c = k.coef[static_cast<std::size_t>(v)][static_cast<std::size_t>(m)](i, j);
            pos = pos && c >= 0.0;
            neg = neg && c <= 0.0;
          }
          double total = 0.0;
          if (pos || neg) {
            for (int m = 0; m < k.q; ++m) {
              total += std::fabs(
                           k.coef[static_cast<std::size_t>(v)][static_cast<std::size_t>(m)](i, j)) *
                       geo[static_cast<std::size_t>(m)];
            }
          } else {
            // Mixed signs: the entry sequence can cross zero, so sum lags
            // explicitly; beyond 50 tau the tail is below 1e-60 relative.
            std::vector<double> decay(static_cast<std::size_t>(k.q), 1.0);
            for (int lag = 1; lag <= horizon; ++lag) {
              double entry = 0.0;
              for (int m = 0; m < k.q; ++m) {
                decay[static_cast<std::size_t>(m)] *= rates[static_cast<std::size_t>(m)];
                entry += k.coef[static_cast<std::size_t>(v)][static_cast<std::size_t>(m)](i, j) *
                         decay[static_cast<std::size_t>(m)];
              }
              total += std::fabs(entry);
            }
          }
          norms[static_cast<std::size_t>(v)](i, j) = total;
        }
      }
    }
    return norms;
  }
  if (!kernel.strictly_periodic()) {
    // Real-period kernel: single upper envelope over all times.
    Matrix bound = Matrix::Zero(d, d);
    for (const Matrix& term : kernel.domination_terms()) bound += term;
    return {bound};
  }
  const int p = kernel.seasons();
  const int horizon = kernel.effective_lags();
  std::vector<Matrix> norms(static_cast<std::size_t>(p), Matrix::Zero(d, d));
  for (int v = 1; v <= p; ++v) {
    for (int lag = 1; lag <= horizon; ++lag) {
      norms[static_cast<std::size_t>(v - 1)] += kernel.eval(v, lag).cwiseAbs();
    }
  }
  return norms;
}

}  // namespace perinet
