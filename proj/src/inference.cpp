#include "perinet/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace perinet {

const char* kind_name(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::general_exp_poly:
      return "general_exp_poly";
    case LayoutKind::network_exp_poly:
      return "network_exp_poly";
    case LayoutKind::trig_network:
      return "trig_network";
    case LayoutKind::lagged_network:
      return "lagged_network";
  }
  return "?";
}

LayoutKind kind_from_name(const std::string& name) {
  if (name == "general_exp_poly") return LayoutKind::general_exp_poly;
  if (name == "network_exp_poly") return LayoutKind::network_exp_poly;
  if (name == "trig_network") return LayoutKind::trig_network;
  if (name == "lagged_network") return LayoutKind::lagged_network;
  throw config_error("layout: unknown kind '" + name + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool geometric_layout(LayoutKind kind) {
  return kind == LayoutKind::general_exp_poly || kind == LayoutKind::network_exp_poly ||
         kind == LayoutKind::trig_network;
}

bool needs_network(LayoutKind kind) {
  return kind != LayoutKind::general_exp_poly;
}

// Single Poisson observation term y log(lambda) - lambda; -inf marks an
// intensity outside the Poisson domain (zero against a positive count,
// negative, or non-finite).
double poisson_term(double y, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) return -kInf;
  if (lambda == 0.0) return y > 0.0 ? -kInf : 0.0;
  return y > 0.0 ? y * std::log(lambda) - lambda : -lambda;
}

struct Kahan {
  long double sum = 0.0L;
  long double carry = 0.0L;
  bool infeasible = false;

  void add(double x) {
    if (!std::isfinite(x)) {
      infeasible = true;
      return;
    }
    const long double y = static_cast<long double>(x) - carry;
    const long double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return infeasible ? -kInf : static_cast<double>(sum); }
};

// Left-to-right double sum so that per-season slices recombine to the total
// bit for bit.
double combine(const std::vector<Kahan>& buckets) {
  double total = 0.0;
  for (const Kahan& b : buckets) total += b.value();
  return total;
}

std::vector<double> decay_factors(int q, double tau, ExponentFamily family) {
  std::vector<double> r(static_cast<std::size_t>(q));
  for (int m = 1; m <= q; ++m) {
    r[static_cast<std::size_t>(m - 1)] =
        std::exp(-static_cast<double>(exponent_rate(family, m)) / tau);
  }
  return r;
}

void check_series_against(const CountSeries& data, int dimension) {
  validate_series(data);
  if (data.dimension() != dimension) {
    throw config_error("likelihood: series width " + std::to_string(data.dimension()) +
                       " does not match dimension " + std::to_string(dimension));
  }
}

double periods_covered(const CountSeries& data, const ModelSpec& spec) {
  return static_cast<double>(data.steps()) / spec.kernel().period();
}

// Per-season likelihood buckets via the full lag sum. Real-period kernels
// collapse to a single bucket.
std::vector<Kahan> direct_buckets(const CountSeries& data, const ModelSpec& spec) {
  check_series_against(data, spec.dimension());
  const PeriodicKernel& kernel = spec.kernel();
  const bool strict = kernel.strictly_periodic();
  const int p = strict ? kernel.seasons() : 1;
  const int d = spec.dimension();
  const std::int64_t steps = data.steps();
  const int reach = std::min<std::int64_t>(kernel.effective_lags(), steps);

  std::vector<Matrix> table;
  if (strict) {
    table.reserve(static_cast<std::size_t>(p) * static_cast<std::size_t>(reach));
    for (int v = 1; v <= p; ++v) {
      for (int lag = 1; lag <= reach; ++lag) table.push_back(kernel.eval(v, lag));
    }
  }

  const Matrix counts_real = data.counts.cast<double>();
  std::vector<Kahan> buckets(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < steps; ++r) {
    const std::int64_t t = data.time_of(r);
    Vector eta = spec.baseline_at(t);
    for (std::int64_t s = std::max<std::int64_t>(0, r - reach); s < r; ++s) {
      const std::int64_t kt = spec.kernel_time(t, data.time_of(s));
      const int lag = static_cast<int>(r - s);
      if (strict) {
        const std::size_t idx =
            static_cast<std::size_t>(season_of(kt, p) - 1) * static_cast<std::size_t>(reach) +
            static_cast<std::size_t>(lag - 1);
        eta.noalias() += table[idx] * counts_real.row(s).transpose();
      } else {
        eta.noalias() += kernel.eval(kt, lag) * counts_real.row(s).transpose();
      }
    }
    Kahan& bucket = buckets[static_cast<std::size_t>(strict ? season_of(t, p) - 1 : 0)];
    for (int i = 0; i < d; ++i) {
      bucket.add(poisson_term(counts_real(r, i), spec.jump_rate()(eta[i])));
    }
  }
  return buckets;
}

// eta += G_m(t) x, matching the recursive-simulation coefficient order.
void add_loading(const PeriodicKernel& kernel, std::int64_t t, int m, const Vector& x,
                 Vector& eta) {
  if (kernel.kind() == KernelKind::exp_poly) {
    const auto& k = kernel.as_exp_poly();
    eta.noalias() += k.coef[static_cast<std::size_t>(season_of(t, k.p) - 1)]
                           [static_cast<std::size_t>(m - 1)] *
                     x;
    return;
  }
  const auto& k = kernel.as_trig();
  const double td = static_cast<double>(t);
  const double a = trig_loading(k.self[static_cast<std::size_t>(m - 1)], td, k.period);
  const double b = trig_loading(k.neighbor[static_cast<std::size_t>(m - 1)], td, k.period);
  eta.noalias() += a * x + b * (k.network.weights() * x);
}

// Per-season buckets through the recursive state, O(qT). Geometric-decay
// kernels only.
std::vector<Kahan> markov_buckets(const CountSeries& data, const ModelSpec& spec) {
  check_series_against(data, spec.dimension());
  const PeriodicKernel& kernel = spec.kernel();
  if (kernel.kind() != KernelKind::exp_poly && kernel.kind() != KernelKind::trig_exp_poly) {
    throw config_error("likelihood: recursive evaluation needs a geometric-decay kernel");
  }
  const bool strict = kernel.strictly_periodic();
  const int p = strict ? kernel.seasons() : 1;
  const int d = spec.dimension();
  const int q = kernel.kind() == KernelKind::exp_poly ? kernel.as_exp_poly().q
                                                      : kernel.as_trig().q;
  const double tau = kernel.kind() == KernelKind::exp_poly ? kernel.as_exp_poly().tau
                                                           : kernel.as_trig().tau;
  const ExponentFamily family = kernel.kind() == KernelKind::exp_poly
                                    ? kernel.as_exp_poly().family
                                    : kernel.as_trig().family;
  const std::vector<double> decay = decay_factors(q, tau, family);

  std::vector<Vector> xi(static_cast<std::size_t>(q), Vector::Zero(d));
  std::vector<Kahan> buckets(static_cast<std::size_t>(p));
  Vector y(d);
  for (std::int64_t r = 0; r < data.steps(); ++r) {
    const std::int64_t t = data.time_of(r);
    Vector eta = spec.baseline_at(t);
    if (spec.indexing() == SeasonIndexing::by_target) {
      for (int m = 1; m <= q; ++m) add_loading(kernel, t, m, xi[static_cast<std::size_t>(m - 1)], eta);
    } else {
      for (int m = 1; m <= q; ++m) eta += xi[static_cast<std::size_t>(m - 1)];
    }
    Kahan& bucket = buckets[static_cast<std::size_t>(strict ? season_of(t, p) - 1 : 0)];
    for (int i = 0; i < d; ++i) {
      bucket.add(poisson_term(static_cast<double>(data.counts(r, i)), spec.jump_rate()(eta[i])));
    }

    y = data.counts.row(r).cast<double>().transpose();
    for (int m = 1; m <= q; ++m) {
      Vector& state = xi[static_cast<std::size_t>(m - 1)];
      const double rm = decay[static_cast<std::size_t>(m - 1)];
      if (spec.indexing() == SeasonIndexing::by_target) {
        state = rm * (state + y);
      } else {
        Vector gain = Vector::Zero(d);
        add_loading(kernel, t, m, y, gain);
        state = rm * (state + gain);
      }
    }
  }
  return buckets;
}

// Precomputed data-driven states for every layout; the packed parameters
// enter each likelihood evaluation linearly through these.
class FitEngine {
 public:
  FitEngine(const CountSeries& data, const ParamLayout& layout)
      : layout_(layout), data_(data) {
    layout.validate();
    check_series_against(data, layout.dimension);
    p_ = layout.seasons;
    d_ = layout.dimension;
    steps_ = data.steps();
    counts_real_ = data.counts.cast<double>();

    factorizes_ = layout.kind != LayoutKind::trig_network &&
                  layout.indexing == SeasonIndexing::by_target;

    if (layout.kind != LayoutKind::trig_network) {
      rows_by_season_.assign(static_cast<std::size_t>(p_), {});
      for (std::int64_t r = 0; r < steps_; ++r) {
        rows_by_season_[static_cast<std::size_t>(season_of(data.time_of(r), p_) - 1)]
            .push_back(r);
      }
    }

    const bool with_network = needs_network(layout.kind);
    if (with_network) weights_ = layout.network->weights();

    if (geometric_layout(layout.kind)) {
      const std::vector<double> decay = decay_factors(layout.q, layout.tau, layout.family);
      if (layout.indexing == SeasonIndexing::by_target) {
        xi_.assign(static_cast<std::size_t>(layout.q), Matrix::Zero(steps_, d_));
        for (int m = 0; m < layout.q; ++m) {
          Vector state = Vector::Zero(d_);
          Matrix& path = xi_[static_cast<std::size_t>(m)];
          for (std::int64_t r = 0; r < steps_; ++r) {
            path.row(r) = state.transpose();
            state = decay[static_cast<std::size_t>(m)] *
                    (state + counts_real_.row(r).transpose());
          }
        }
        if (with_network) {
          wxi_.reserve(xi_.size());
          for (const Matrix& path : xi_) wxi_.push_back(path * weights_.transpose());
        }
      } else {
        // One state per (exponential, source season): the coefficient of
        // season w multiplies exactly the counts that fell on season w.
        xi_source_.assign(static_cast<std::size_t>(layout.q),
                          std::vector<Matrix>(static_cast<std::size_t>(p_),
                                              Matrix::Zero(steps_, d_)));
        for (int m = 0; m < layout.q; ++m) {
          std::vector<Vector> state(static_cast<std::size_t>(p_), Vector::Zero(d_));
          for (std::int64_t r = 0; r < steps_; ++r) {
            for (int w = 0; w < p_; ++w) {
              xi_source_[static_cast<std::size_t>(m)][static_cast<std::size_t>(w)].row(r) =
                  state[static_cast<std::size_t>(w)].transpose();
            }
            const int w = season_of(data.time_of(r), p_) - 1;
            state[static_cast<std::size_t>(w)] += counts_real_.row(r).transpose();
            for (int u = 0; u < p_; ++u) {
              state[static_cast<std::size_t>(u)] *= decay[static_cast<std::size_t>(m)];
            }
          }
        }
        if (with_network) {
          wxi_source_.assign(xi_source_.size(), {});
          for (std::size_t m = 0; m < xi_source_.size(); ++m) {
            for (const Matrix& path : xi_source_[m]) {
              wxi_source_[m].push_back(path * weights_.transpose());
            }
          }
        }
      }
    }

    if (layout.kind == LayoutKind::trig_network) {
      basis_ = Matrix::Zero(steps_, 1 + 2 * layout.harmonics);
      for (std::int64_t r = 0; r < steps_; ++r) {
        const double t = static_cast<double>(data.time_of(r));
        basis_(r, 0) = 1.0;
        for (int j = 1; j <= layout.harmonics; ++j) {
          const double angle = 2.0 * std::numbers::pi * j * t / layout.period;
          basis_(r, 2 * j - 1) = std::sin(angle);
          basis_(r, 2 * j) = std::cos(angle);
        }
      }
    }

    if (layout.kind == LayoutKind::lagged_network) {
      lag_counts_.assign(static_cast<std::size_t>(layout.lags), Matrix::Zero(steps_, d_));
      for (int k = 1; k <= layout.lags; ++k) {
        Matrix& shifted = lag_counts_[static_cast<std::size_t>(k - 1)];
        for (std::int64_t r = k; r < steps_; ++r) shifted.row(r) = counts_real_.row(r - k);
      }
      wlag_counts_.reserve(lag_counts_.size());
      for (const Matrix& shifted : lag_counts_) {
        wlag_counts_.push_back(shifted * weights_.transpose());
      }
    }
  }

  bool factorizes() const { return factorizes_; }

  // Log-likelihood restricted to rows of one season, as a function of that
  // season's parameter block. grad (sized to the block) may be null.
  double season_value(int season, const Vector& block, Vector* grad) const {
    if (!factorizes_) throw config_error("fit: this layout does not factorize by season");
    if (grad) grad->setZero();
    Kahan bucket;
    Vector eta(d_), w(d_);
    for (std::int64_t r : rows_by_season_[static_cast<std::size_t>(season - 1)]) {
      fill_eta_target(block, r, eta);
      if (!accumulate_row(r, eta, bucket, grad ? &w : nullptr)) {
        if (grad) grad->setZero();
        return -kInf;
      }
      if (grad) scatter_grad_target(r, w, *grad);
    }
    return bucket.value();
  }

  // Total log-likelihood; gradient sized to the full packed vector. The
  // total is the in-order sum of the per-season slices.
  double joint_value(const Vector& gamma, Vector* grad) const {
    if (grad) grad->setZero();
    if (factorizes_) {
      const int block_len = layout_.season_block();
      double total = 0.0;
      for (int v = 1; v <= p_; ++v) {
        const Vector block = gamma.segment(static_cast<std::int64_t>(v - 1) * block_len,
                                           block_len);
        Vector block_grad;
        if (grad) block_grad = Vector::Zero(block_len);
        const double value = season_value(v, block, grad ? &block_grad : nullptr);
        if (grad) {
          grad->segment(static_cast<std::int64_t>(v - 1) * block_len, block_len) = block_grad;
        }
        total += value;
      }
      return total;
    }
    if (layout_.kind == LayoutKind::trig_network) return trig_value(gamma, grad);
    return source_value(gamma, grad);
  }

 private:
  // Poisson terms and weights (y/lambda - 1) psi'(eta) for one row; false
  // means the intensity left the domain.
  bool accumulate_row(std::int64_t r, const Vector& eta, Kahan& bucket, Vector* w) const {
    const JumpRate& rate = layout_.rate;
    for (int i = 0; i < d_; ++i) {
      const double lambda = rate(eta[i]);
      const double y = counts_real_(r, i);
      const double term = poisson_term(y, lambda);
      if (term == -kInf) return false;
      bucket.add(term);
      if (w) {
        (*w)[i] = lambda > 0.0 ? (y / lambda - 1.0) * rate.derivative(eta[i])
                               : -rate.derivative(eta[i]);
      }
    }
    return true;
  }

  void fill_eta_target(const Vector& block, std::int64_t r, Vector& eta) const {
    switch (layout_.kind) {
      case LayoutKind::general_exp_poly: {
        eta.setConstant(block[0]);
        for (int m = 0; m < layout_.q; ++m) {
          const Eigen::Map<const Matrix> gm(block.data() + 1 +
                                                static_cast<std::ptrdiff_t>(m) * d_ * d_,
                                            d_, d_);
          eta.noalias() += gm * xi_[static_cast<std::size_t>(m)].row(r).transpose();
        }
        return;
      }
      case LayoutKind::network_exp_poly: {
        eta.setConstant(block[0]);
        for (int m = 0; m < layout_.q; ++m) {
          eta.noalias() += block[1 + m] * xi_[static_cast<std::size_t>(m)].row(r).transpose();
          eta.noalias() +=
              block[1 + layout_.q + m] * wxi_[static_cast<std::size_t>(m)].row(r).transpose();
        }
        return;
      }
      case LayoutKind::lagged_network: {
        eta = block.head(d_);
        for (int k = 0; k < layout_.lags; ++k) {
          eta.noalias() +=
              block[d_ + k] * lag_counts_[static_cast<std::size_t>(k)].row(r).transpose();
          eta.noalias() += block[d_ + layout_.lags + k] *
                           wlag_counts_[static_cast<std::size_t>(k)].row(r).transpose();
        }
        return;
      }
      case LayoutKind::trig_network:
        break;
    }
    throw config_error("fit: layout cannot be evaluated season by season");
  }

  void scatter_grad_target(std::int64_t r, const Vector& w, Vector& grad) const {
    switch (layout_.kind) {
      case LayoutKind::general_exp_poly: {
        grad[0] += w.sum();
        for (int m = 0; m < layout_.q; ++m) {
          Eigen::Map<Matrix> gm(grad.data() + 1 + static_cast<std::ptrdiff_t>(m) * d_ * d_, d_,
                                d_);
          gm.noalias() += w * xi_[static_cast<std::size_t>(m)].row(r);
        }
        return;
      }
      case LayoutKind::network_exp_poly: {
        grad[0] += w.sum();
        for (int m = 0; m < layout_.q; ++m) {
          grad[1 + m] += w.dot(xi_[static_cast<std::size_t>(m)].row(r));
          grad[1 + layout_.q + m] += w.dot(wxi_[static_cast<std::size_t>(m)].row(r));
        }
        return;
      }
      case LayoutKind::lagged_network: {
        grad.head(d_) += w;
        for (int k = 0; k < layout_.lags; ++k) {
          grad[d_ + k] += w.dot(lag_counts_[static_cast<std::size_t>(k)].row(r));
          grad[d_ + layout_.lags + k] += w.dot(wlag_counts_[static_cast<std::size_t>(k)].row(r));
        }
        return;
      }
      case LayoutKind::trig_network:
        break;
    }
    throw config_error("fit: layout cannot be evaluated season by season");
  }

  // Source-season indexing couples all seasons; one joint sweep.
  double source_value(const Vector& gamma, Vector* grad) const {
    const int block_len = layout_.season_block();
    std::vector<Kahan> buckets(static_cast<std::size_t>(p_));
    Vector eta(d_), w(d_);
    for (std::int64_t r = 0; r < steps_; ++r) {
      const int tv = season_of(data_.time_of(r), p_) - 1;
      if (layout_.kind == LayoutKind::general_exp_poly ||
          layout_.kind == LayoutKind::network_exp_poly) {
        eta.setConstant(gamma[static_cast<std::int64_t>(tv) * block_len]);
        for (int w_season = 0; w_season < p_; ++w_season) {
          const std::int64_t off = static_cast<std::int64_t>(w_season) * block_len;
          for (int m = 0; m < layout_.q; ++m) {
            const auto& path = xi_source_[static_cast<std::size_t>(m)]
                                         [static_cast<std::size_t>(w_season)];
            if (layout_.kind == LayoutKind::general_exp_poly) {
              const Eigen::Map<const Matrix> gm(
                  gamma.data() + off + 1 + static_cast<std::ptrdiff_t>(m) * d_ * d_, d_, d_);
              eta.noalias() += gm * path.row(r).transpose();
            } else {
              eta.noalias() += gamma[off + 1 + m] * path.row(r).transpose();
              eta.noalias() += gamma[off + 1 + layout_.q + m] *
                               wxi_source_[static_cast<std::size_t>(m)]
                                          [static_cast<std::size_t>(w_season)]
                                              .row(r)
                                              .transpose();
            }
          }
        }
      } else {
        // Lagged kernel under source indexing: lag k wears the season of the
        // source time t - k.
        eta = gamma.segment(static_cast<std::int64_t>(tv) * block_len, d_);
        for (int k = 1; k <= layout_.lags; ++k) {
          const int sv = season_of(data_.time_of(r) - k, p_) - 1;
          const std::int64_t off = static_cast<std::int64_t>(sv) * block_len;
          eta.noalias() +=
              gamma[off + d_ + (k - 1)] *
              lag_counts_[static_cast<std::size_t>(k - 1)].row(r).transpose();
          eta.noalias() += gamma[off + d_ + layout_.lags + (k - 1)] *
                           wlag_counts_[static_cast<std::size_t>(k - 1)].row(r).transpose();
        }
      }

      if (!accumulate_row(r, eta, buckets[static_cast<std::size_t>(tv)],
                          grad ? &w : nullptr)) {
        if (grad) grad->setZero();
        return -kInf;
      }
      if (!grad) continue;

      if (layout_.kind == LayoutKind::general_exp_poly ||
          layout_.kind == LayoutKind::network_exp_poly) {
        (*grad)[static_cast<std::int64_t>(tv) * block_len] += w.sum();
        for (int w_season = 0; w_season < p_; ++w_season) {
          const std::int64_t off = static_cast<std::int64_t>(w_season) * block_len;
          for (int m = 0; m < layout_.q; ++m) {
            const auto& path = xi_source_[static_cast<std::size_t>(m)]
                                         [static_cast<std::size_t>(w_season)];
            if (layout_.kind == LayoutKind::general_exp_poly) {
              Eigen::Map<Matrix> gm(grad->data() + off + 1 +
                                        static_cast<std::ptrdiff_t>(m) * d_ * d_,
                                    d_, d_);
              gm.noalias() += w * path.row(r);
            } else {
              (*grad)[off + 1 + m] += w.dot(path.row(r));
              (*grad)[off + 1 + layout_.q + m] +=
                  w.dot(wxi_source_[static_cast<std::size_t>(m)]
                                   [static_cast<std::size_t>(w_season)]
                                       .row(r));
            }
          }
        }
      } else {
        grad->segment(static_cast<std::int64_t>(tv) * block_len, d_) += w;
        for (int k = 1; k <= layout_.lags; ++k) {
          const int sv = season_of(data_.time_of(r) - k, p_) - 1;
          const std::int64_t off = static_cast<std::int64_t>(sv) * block_len;
          (*grad)[off + d_ + (k - 1)] +=
              w.dot(lag_counts_[static_cast<std::size_t>(k - 1)].row(r));
          (*grad)[off + d_ + layout_.lags + (k - 1)] +=
              w.dot(wlag_counts_[static_cast<std::size_t>(k - 1)].row(r));
        }
      }
    }
    return combine(buckets);
  }

  double trig_value(const Vector& gamma, Vector* grad) const {
    const int rows = 1 + 2 * layout_.harmonics;
    const Eigen::Map<const Matrix> mu_coef(gamma.data(), rows, d_);
    Kahan bucket;
    Vector eta(d_), w(d_), bs(rows);
    for (std::int64_t r = 0; r < steps_; ++r) {
      bs = basis_.row(r).transpose();
      eta.noalias() = mu_coef.transpose() * bs;
      for (int m = 0; m < layout_.q; ++m) {
        const std::int64_t off = static_cast<std::int64_t>(rows) * d_ +
                                 static_cast<std::int64_t>(m) * rows;
        const double a = bs.dot(gamma.segment(off, rows));
        const double b = bs.dot(gamma.segment(
            off + static_cast<std::int64_t>(layout_.q) * rows, rows));
        eta.noalias() += a * xi_[static_cast<std::size_t>(m)].row(r).transpose();
        eta.noalias() += b * wxi_[static_cast<std::size_t>(m)].row(r).transpose();
      }
      if (!accumulate_row(r, eta, bucket, grad ? &w : nullptr)) {
        if (grad) grad->setZero();
        return -kInf;
      }
      if (!grad) continue;

      Eigen::Map<Matrix> mu_grad(grad->data(), rows, d_);
      mu_grad.noalias() += bs * w.transpose();
      for (int m = 0; m < layout_.q; ++m) {
        const std::int64_t off = static_cast<std::int64_t>(rows) * d_ +
                                 static_cast<std::int64_t>(m) * rows;
        grad->segment(off, rows) += w.dot(xi_[static_cast<std::size_t>(m)].row(r)) * bs;
        grad->segment(off + static_cast<std::int64_t>(layout_.q) * rows, rows) +=
            w.dot(wxi_[static_cast<std::size_t>(m)].row(r)) * bs;
      }
    }
    return bucket.value();
  }

  const ParamLayout& layout_;
  const CountSeries& data_;
  int p_ = 1, d_ = 1;
  std::int64_t steps_ = 0;
  bool factorizes_ = false;
  Matrix counts_real_;
  Matrix weights_;
  std::vector<std::vector<std::int64_t>> rows_by_season_;
  std::vector<Matrix> xi_, wxi_;
  std::vector<std::vector<Matrix>> xi_source_, wxi_source_;
  Matrix basis_;
  std::vector<Matrix> lag_counts_, wlag_counts_;
};

Vector fd_gradient(const std::function<double(const Vector&)>& value, const Vector& x) {
  Vector g = Vector::Zero(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::fabs(x[i]));
    probe[i] = x[i] + h;
    const double up = value(probe);
    probe[i] = x[i] - h;
    const double down = value(probe);
    probe[i] = x[i];
    g[i] = (std::isfinite(up) && std::isfinite(down)) ? (up - down) / (2.0 * h) : 0.0;
  }
  return g;
}

std::string indexing_name(SeasonIndexing indexing) {
  return indexing == SeasonIndexing::by_target ? "by_target" : "by_source";
}

SeasonIndexing indexing_from_name(const std::string& name) {
  if (name == "by_target") return SeasonIndexing::by_target;
  if (name == "by_source") return SeasonIndexing::by_source;
  throw config_error("layout: unknown indexing '" + name + "'");
}

std::string family_name(ExponentFamily family) {
  return family == ExponentFamily::odd ? "odd" : "all";
}

ExponentFamily family_from_name(const std::string& name) {
  if (name == "odd") return ExponentFamily::odd;
  if (name == "all") return ExponentFamily::all;
  throw config_error("layout: unknown exponent family '" + name + "'");
}

}  // namespace

ParamLayout ParamLayout::general(int seasons, int dimension, int q, double tau,
                                 ExponentFamily family, SeasonIndexing indexing, JumpRate rate) {
  ParamLayout layout;
  layout.kind = LayoutKind::general_exp_poly;
  layout.seasons = seasons;
  layout.dimension = dimension;
  layout.q = q;
  layout.tau = tau;
  layout.family = family;
  layout.indexing = indexing;
  layout.rate = std::move(rate);
  layout.validate();
  return layout;
}

ParamLayout ParamLayout::network_poly(int seasons, NetworkSpec net, int q, double tau,
                                      ExponentFamily family, SeasonIndexing indexing,
                                      JumpRate rate) {
  ParamLayout layout;
  layout.kind = LayoutKind::network_exp_poly;
  layout.seasons = seasons;
  layout.dimension = net.size();
  layout.network = std::move(net);
  layout.q = q;
  layout.tau = tau;
  layout.family = family;
  layout.indexing = indexing;
  layout.rate = std::move(rate);
  layout.validate();
  return layout;
}

ParamLayout ParamLayout::trig(NetworkSpec net, double period, int harmonics, int q, double tau,
                              ExponentFamily family, JumpRate rate) {
  ParamLayout layout;
  layout.kind = LayoutKind::trig_network;
  layout.seasons = 1;
  layout.dimension = net.size();
  layout.network = std::move(net);
  layout.period = period;
  layout.harmonics = harmonics;
  layout.q = q;
  layout.tau = tau;
  layout.family = family;
  layout.rate = std::move(rate);
  layout.validate();
  return layout;
}

ParamLayout ParamLayout::lagged(NetworkSpec net, int lags, int seasons, JumpRate rate) {
  ParamLayout layout;
  layout.kind = LayoutKind::lagged_network;
  layout.seasons = seasons;
  layout.dimension = net.size();
  layout.network = std::move(net);
  layout.lags = lags;
  layout.rate = std::move(rate);
  layout.validate();
  return layout;
}

int ParamLayout::season_block() const {
  switch (kind) {
    case LayoutKind::general_exp_poly:
      return 1 + dimension * dimension * q;
    case LayoutKind::network_exp_poly:
      return 1 + 2 * q;
    case LayoutKind::lagged_network:
      return dimension + 2 * lags;
    case LayoutKind::trig_network:
      return 0;
  }
  return 0;
}

int ParamLayout::size() const {
  if (kind == LayoutKind::trig_network) {
    return (1 + 2 * harmonics) * (dimension + 2 * q);
  }
  return seasons * season_block();
}

int ParamLayout::free_parameters() const {
  if (!freeze_kernel) return size();
  switch (kind) {
    case LayoutKind::general_exp_poly:
      return seasons;
    case LayoutKind::network_exp_poly:
      return seasons;
    case LayoutKind::lagged_network:
      return seasons * dimension;
    case LayoutKind::trig_network:
      return (1 + 2 * harmonics) * dimension;
  }
  return size();
}

void ParamLayout::validate() const {
  if (seasons < 1) throw config_error("layout: seasons must be >= 1");
  if (dimension < 1) throw config_error("layout: dimension must be >= 1");
  if (!(coef_bound > 0.0) || !(baseline_bound > 0.0)) {
    throw config_error("layout: bounds must be positive");
  }
  if (geometric_layout(kind)) {
    if (q < 1) throw config_error("layout: q must be >= 1");
    if (!(tau > 0.0)) throw config_error("layout: tau must be positive");
  }
  if (kind == LayoutKind::lagged_network && lags < 1) {
    throw config_error("layout: lags must be >= 1");
  }
  if (kind == LayoutKind::trig_network) {
    if (harmonics < 0) throw config_error("layout: harmonics must be >= 0");
    if (!(period > 0.0)) throw config_error("layout: period must be positive");
    if (indexing != SeasonIndexing::by_target) {
      throw config_error("layout: the real-period layout only supports target indexing");
    }
  }
  if (needs_network(kind)) {
    if (!network.has_value()) throw config_error("layout: this kind needs a network");
    if (network->size() != dimension) {
      throw config_error("layout: network size does not match the dimension");
    }
  }
}

BoxBounds ParamLayout::bounds() const {
  validate();
  const int n = size();
  BoxBounds box;
  box.lower = Vector::Constant(n, -coef_bound);
  box.upper = Vector::Constant(n, coef_bound);
  if (freeze_kernel) {
    box.lower.setZero();
    box.upper.setZero();
  }

  auto open_baseline = [&](std::int64_t at, std::int64_t len) {
    box.lower.segment(at, len).setConstant(-baseline_bound);
    box.upper.segment(at, len).setConstant(baseline_bound);
  };
  if (kind == LayoutKind::trig_network) {
    open_baseline(0, static_cast<std::int64_t>(1 + 2 * harmonics) * dimension);
    return box;
  }
  const int block = season_block();
  const std::int64_t head = kind == LayoutKind::lagged_network ? dimension : 1;
  for (int v = 0; v < seasons; ++v) {
    open_baseline(static_cast<std::int64_t>(v) * block, head);
  }
  return box;
}

Vector ParamLayout::pack(const ModelSpec& spec) const {
  validate();
  if (spec.dimension() != dimension) {
    throw config_error("layout: model dimension does not match");
  }
  Vector gamma = Vector::Zero(size());
  const double tol = 1e-9;

  auto near = [&](double a, double b) { return std::fabs(a - b) <= tol * (1.0 + std::fabs(b)); };

  switch (kind) {
    case LayoutKind::general_exp_poly:
    case LayoutKind::network_exp_poly: {
      if (spec.kernel().kind() != KernelKind::exp_poly) {
        throw config_error("layout: expected a geometric-decay kernel");
      }
      const auto& k = spec.kernel().as_exp_poly();
      if (k.p != seasons || k.q != q || !near(k.tau, tau) || k.family != family) {
        throw config_error("layout: kernel decay grid does not match the layout");
      }
      if (spec.trig_baseline()) throw config_error("layout: expected a seasonal baseline");
      const Matrix& base = spec.seasonal_baseline();
      const int block = season_block();
      for (int v = 0; v < seasons; ++v) {
        const auto row = base.row(v);
        if (row.maxCoeff() - row.minCoeff() > tol * (1.0 + row.cwiseAbs().maxCoeff())) {
          throw config_error("layout: baseline must be one shared scalar per season");
        }
        const std::int64_t off = static_cast<std::int64_t>(v) * block;
        gamma[off] = base(v, 0);
        for (int m = 0; m < q; ++m) {
          const Matrix& g = k.coef[static_cast<std::size_t>(v)][static_cast<std::size_t>(m)];
          if (kind == LayoutKind::general_exp_poly) {
            Eigen::Map<Matrix>(gamma.data() + off + 1 + static_cast<std::ptrdiff_t>(m) * dimension * dimension,
                               dimension, dimension) = g;
          } else {
            const Matrix& w = network->weights();
            const double a = g(0, 0);
            double b = 0.0;
            for (int i = 0; i < dimension && b == 0.0; ++i) {
              for (int j = 0; j < dimension; ++j) {
                if (w(i, j) != 0.0) {
                  b = g(i, j) / w(i, j);
                  break;
                }
              }
            }
            if ((g - a * Matrix::Identity(dimension, dimension) - b * w).cwiseAbs().maxCoeff() >
                tol * (1.0 + std::fabs(a) + std::fabs(b))) {
              throw config_error("layout: coefficient is not of the self + neighbor form");
            }
            gamma[off + 1 + m] = a;
            gamma[off + 1 + q + m] = b;
          }
        }
      }
      return gamma;
    }
    case LayoutKind::trig_network: {
      if (spec.kernel().kind() != KernelKind::trig_exp_poly) {
        throw config_error("layout: expected a real-period kernel");
      }
      const auto& k = spec.kernel().as_trig();
      if (k.q != q || k.harmonics != harmonics || !near(k.tau, tau) || !near(k.period, period) ||
          k.family != family) {
        throw config_error("layout: kernel decay grid does not match the layout");
      }
      if (!spec.trig_baseline()) throw config_error("layout: expected a Fourier baseline");
      const TrigBaseline& base = spec.trig_baseline_spec();
      const int rows = 1 + 2 * harmonics;
      if (base.harmonics != harmonics) {
        throw config_error("layout: baseline harmonic order does not match");
      }
      Eigen::Map<Matrix>(gamma.data(), rows, dimension) = base.coeffs;
      for (int m = 0; m < q; ++m) {
        for (int j = 0; j < rows; ++j) {
          gamma[static_cast<std::int64_t>(rows) * dimension +
                static_cast<std::int64_t>(m) * rows + j] =
              k.self[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
          gamma[static_cast<std::int64_t>(rows) * dimension +
                static_cast<std::int64_t>(q) * rows + static_cast<std::int64_t>(m) * rows + j] =
              k.neighbor[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
        }
      }
      return gamma;
    }
    case LayoutKind::lagged_network: {
      if (spec.kernel().kind() != KernelKind::network) {
        throw config_error("layout: expected a lagwise network kernel");
      }
      const auto& k = spec.kernel().as_network();
      if (k.p != seasons) throw config_error("layout: season count does not match");
      if (spec.trig_baseline()) throw config_error("layout: expected a seasonal baseline");
      const int block = season_block();
      for (int v = 0; v < seasons; ++v) {
        const auto& alpha = k.alpha[static_cast<std::size_t>(v)];
        const auto& beta = k.beta[static_cast<std::size_t>(v)];
        if (static_cast<int>(alpha.size()) != lags) {
          throw config_error("layout: stored lag count does not match");
        }
        const std::int64_t off = static_cast<std::int64_t>(v) * block;
        gamma.segment(off, dimension) = spec.seasonal_baseline().row(v).transpose();
        for (int g = 0; g < lags; ++g) {
          gamma[off + dimension + g] = alpha[static_cast<std::size_t>(g)];
          gamma[off + dimension + lags + g] = beta[static_cast<std::size_t>(g)];
        }
      }
      return gamma;
    }
  }
  throw config_error("layout: unsupported kind");
}

ModelSpec ParamLayout::unpack(const Vector& gamma) const {
  validate();
  if (gamma.size() != size()) {
    throw config_error("layout: packed vector has length " + std::to_string(gamma.size()) +
                       ", expected " + std::to_string(size()));
  }

  switch (kind) {
    case LayoutKind::general_exp_poly:
    case LayoutKind::network_exp_poly: {
      ExpPolyKernel k;
      k.p = seasons;
      k.q = q;
      k.tau = tau;
      k.family = family;
      k.coef.assign(static_cast<std::size_t>(seasons),
                    std::vector<Matrix>(static_cast<std::size_t>(q)));
      Matrix base(seasons, dimension);
      const int block = season_block();
      for (int v = 0; v < seasons; ++v) {
        const std::int64_t off = static_cast<std::int64_t>(v) * block;
        base.row(v).setConstant(gamma[off]);
        for (int m = 0; m < q; ++m) {
          Matrix& g = k.coef[static_cast<std::size_t>(v)][static_cast<std::size_t>(m)];
          if (kind == LayoutKind::general_exp_poly) {
            g = Eigen::Map<const Matrix>(
                gamma.data() + off + 1 + static_cast<std::ptrdiff_t>(m) * dimension * dimension,
                dimension, dimension);
          } else {
            g = gamma[off + 1 + q + m] * network->weights();
            g.diagonal().array() += gamma[off + 1 + m];
          }
        }
      }
      return ModelSpec(PeriodicKernel(std::move(k)), std::move(base), rate, indexing,
                       /*shared_nodes=*/true);
    }
    case LayoutKind::trig_network: {
      const int rows = 1 + 2 * harmonics;
      TrigExpPolyKernel k;
      k.period = period;
      k.harmonics = harmonics;
      k.q = q;
      k.tau = tau;
      k.family = family;
      k.network = *network;
      k.self.assign(static_cast<std::size_t>(q),
                    std::vector<double>(static_cast<std::size_t>(rows)));
      k.neighbor = k.self;
      for (int m = 0; m < q; ++m) {
        for (int j = 0; j < rows; ++j) {
          k.self[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] =
              gamma[static_cast<std::int64_t>(rows) * dimension +
                    static_cast<std::int64_t>(m) * rows + j];
          k.neighbor[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] =
              gamma[static_cast<std::int64_t>(rows) * dimension +
                    static_cast<std::int64_t>(q) * rows + static_cast<std::int64_t>(m) * rows +
                    j];
        }
      }
      TrigBaseline base;
      base.harmonics = harmonics;
      base.coeffs = Eigen::Map<const Matrix>(gamma.data(), rows, dimension);
      return ModelSpec(PeriodicKernel(std::move(k)), std::move(base), rate,
                       SeasonIndexing::by_target);
    }
    case LayoutKind::lagged_network: {
      NetworkKernel k;
      k.p = seasons;
      k.network = *network;
      k.alpha.assign(static_cast<std::size_t>(seasons),
                     std::vector<double>(static_cast<std::size_t>(lags)));
      k.beta = k.alpha;
      Matrix base(seasons, dimension);
      const int block = season_block();
      for (int v = 0; v < seasons; ++v) {
        const std::int64_t off = static_cast<std::int64_t>(v) * block;
        base.row(v) = gamma.segment(off, dimension).transpose();
        for (int g = 0; g < lags; ++g) {
          k.alpha[static_cast<std::size_t>(v)][static_cast<std::size_t>(g)] =
              gamma[off + dimension + g];
          k.beta[static_cast<std::size_t>(v)][static_cast<std::size_t>(g)] =
              gamma[off + dimension + lags + g];
        }
      }
      return ModelSpec(PeriodicKernel(std::move(k)), std::move(base), rate, indexing,
                       /*shared_nodes=*/false);
    }
  }
  throw config_error("layout: unsupported kind");
}

Json layout_to_json(const ParamLayout& layout) {
  Json j;
  j["kind"] = kind_name(layout.kind);
  j["seasons"] = layout.seasons;
  j["dimension"] = layout.dimension;
  if (geometric_layout(layout.kind)) {
    j["q"] = layout.q;
    j["tau"] = layout.tau;
    j["family"] = family_name(layout.family);
  }
  if (layout.kind == LayoutKind::lagged_network) j["lags"] = layout.lags;
  if (layout.kind == LayoutKind::trig_network) {
    j["harmonics"] = layout.harmonics;
    j["period"] = layout.period;
  }
  if (layout.network.has_value()) j["network"] = network_to_json(*layout.network);
  j["indexing"] = indexing_name(layout.indexing);
  j["rate"] = jump_rate_to_json(layout.rate);
  j["coef_bound"] = layout.coef_bound;
  j["baseline_bound"] = layout.baseline_bound;
  if (layout.freeze_kernel) j["freeze_kernel"] = true;
  return j;
}

ParamLayout layout_from_json(const Json& j) {
  ParamLayout layout;
  layout.kind = kind_from_name(j.at("kind").get<std::string>());
  layout.seasons = j.value("seasons", 1);
  layout.dimension = j.at("dimension").get<int>();
  layout.q = j.value("q", 1);
  layout.tau = j.value("tau", 1.0);
  if (j.contains("family")) layout.family = family_from_name(j["family"].get<std::string>());
  layout.lags = j.value("lags", 1);
  layout.harmonics = j.value("harmonics", 1);
  layout.period = j.value("period", 1.0);
  if (j.contains("network")) layout.network = network_from_json(j["network"]);
  if (j.contains("indexing")) {
    layout.indexing = indexing_from_name(j["indexing"].get<std::string>());
  }
  if (j.contains("rate")) layout.rate = jump_rate_from_json(j["rate"]);
  layout.coef_bound = j.value("coef_bound", 50.0);
  layout.baseline_bound = j.value("baseline_bound", 50.0);
  layout.freeze_kernel = j.value("freeze_kernel", false);
  layout.validate();
  return layout;
}

double log_likelihood(const CountSeries& data, const ModelSpec& spec, bool normalized) {
  const double total = combine(direct_buckets(data, spec));
  return normalized ? total / periods_covered(data, spec) : total;
}

double markov_log_likelihood(const CountSeries& data, const ModelSpec& spec, bool normalized) {
  const double total = combine(markov_buckets(data, spec));
  return normalized ? total / periods_covered(data, spec) : total;
}

double seasonal_log_likelihood(const CountSeries& data, const ModelSpec& spec, int season) {
  if (!spec.kernel().strictly_periodic()) {
    throw config_error("likelihood: real-period models have no season slices");
  }
  if (spec.indexing() != SeasonIndexing::by_target) {
    throw config_error(
        "likelihood: only target-season indexing factorizes by season; evaluate jointly");
  }
  const int p = spec.kernel().seasons();
  if (season < 1 || season > p) {
    throw config_error("likelihood: season " + std::to_string(season) + " outside 1.." +
                       std::to_string(p));
  }
  const bool geometric = spec.kernel().kind() == KernelKind::exp_poly;
  const std::vector<Kahan> buckets =
      geometric ? markov_buckets(data, spec) : direct_buckets(data, spec);
  return buckets[static_cast<std::size_t>(season - 1)].value();
}

Vector loglik_gradient(const CountSeries& data, const ParamLayout& layout, const Vector& gamma,
                       bool* analytic) {
  if (gamma.size() != layout.size()) {
    throw config_error("gradient: packed vector length does not match the layout");
  }
  const FitEngine engine(data, layout);
  const bool use_analytic = layout.rate.differentiable();
  if (analytic) *analytic = use_analytic;
  if (use_analytic) {
    Vector grad = Vector::Zero(layout.size());
    engine.joint_value(gamma, &grad);
    return grad;
  }
  return fd_gradient([&](const Vector& x) { return engine.joint_value(x, nullptr); }, gamma);
}

namespace {

Vector default_init(const CountSeries& data, const ParamLayout& layout) {
  Vector gamma = Vector::Zero(layout.size());
  const JumpRate& rate = layout.rate;
  auto invert_mean = [&](double mean) {
    const double reachable = std::max(mean, rate.floor() + 1e-9);
    double mu = 0.0;
    if (rate.kind() == JumpRateKind::identity) {
      mu = std::max(mean, 0.0);
    } else {
      mu = rate.inverse(reachable);
    }
    return std::clamp(mu, -layout.baseline_bound, layout.baseline_bound);
  };

  const double grand_mean =
      static_cast<double>(data.counts.sum()) /
      (static_cast<double>(data.steps()) * static_cast<double>(data.dimension()));

  if (layout.kind == LayoutKind::trig_network) {
    const int rows = 1 + 2 * layout.harmonics;
    for (int i = 0; i < layout.dimension; ++i) {
      const double node_mean = static_cast<double>(data.counts.col(i).sum()) /
                               static_cast<double>(data.steps());
      gamma[static_cast<std::int64_t>(i) * rows] = invert_mean(node_mean);
    }
    return gamma;
  }

  const int block = layout.season_block();
  for (int v = 0; v < layout.seasons; ++v) {
    const std::int64_t off = static_cast<std::int64_t>(v) * block;
    if (layout.kind == LayoutKind::lagged_network) {
      for (int i = 0; i < layout.dimension; ++i) {
        const double node_mean = static_cast<double>(data.counts.col(i).sum()) /
                                 static_cast<double>(data.steps());
        gamma[off + i] = invert_mean(node_mean);
      }
    } else {
      gamma[off] = invert_mean(grand_mean);
    }
  }
  return gamma;
}

std::function<double(const Vector&, Vector*)> negated_objective(
    const std::function<double(const Vector&, Vector*)>& value, bool analytic) {
  if (analytic) {
    return [value](const Vector& x, Vector* g) {
      const double f = value(x, g);
      if (g) *g = -*g;
      return -f;
    };
  }
  return [value](const Vector& x, Vector* g) {
    const double f = value(x, nullptr);
    if (g) {
      *g = std::isfinite(f)
               ? Vector(-fd_gradient([&](const Vector& p) { return value(p, nullptr); }, x))
               : Vector(Vector::Zero(x.size()));
    }
    return -f;
  };
}

}  // namespace

FitResult fit_mle(const CountSeries& data, const ParamLayout& layout, const FitOptions& options) {
  layout.validate();
  const FitEngine engine(data, layout);
  const BoxBounds box = layout.bounds();

  Vector init;
  if (options.init.has_value()) {
    if (options.init->size() != layout.size()) {
      throw config_error("fit: starting point length does not match the layout");
    }
    init = box.clamp(*options.init);
  } else {
    init = box.clamp(default_init(data, layout));
  }

  const double init_loglik = engine.joint_value(init, nullptr);
  if (!std::isfinite(init_loglik)) {
    throw numeric_error(
        "fit: log-likelihood is not finite at the starting point; the intensity left the "
        "Poisson domain (a rate floor avoids this)");
  }

  const bool analytic = layout.rate.differentiable();
  FitResult out;
  out.layout = layout;
  out.init_loglik = init_loglik;
  out.parameter_count = layout.free_parameters();
  out.observation_count = data.steps() * layout.dimension;
  out.gradient_analytic = analytic;

  Vector gamma = init;
  if (engine.factorizes()) {
    const int p = layout.seasons;
    const int block_len = layout.season_block();
    out.seasons.assign(static_cast<std::size_t>(p), SeasonFit{});

    std::atomic<int> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(p));
    auto worker = [&] {
      for (;;) {
        const int v = next.fetch_add(1);
        if (v >= p) return;
        try {
          const std::int64_t off = static_cast<std::int64_t>(v) * block_len;
          const auto value = [&engine, v](const Vector& x, Vector* g) {
            return engine.season_value(v + 1, x, g);
          };
          BoxBounds slice;
          slice.lower = box.lower.segment(off, block_len);
          slice.upper = box.upper.segment(off, block_len);
          const MinimizeResult res = minimize_bfgs(negated_objective(value, analytic),
                                                   init.segment(off, block_len), slice,
                                                   options.optimizer);
          gamma.segment(off, block_len) = res.x;
          out.seasons[static_cast<std::size_t>(v)] =
              SeasonFit{v + 1, -res.value, res.gradient_norm, res.iterations, res.converged};
        } catch (...) {
          failures[static_cast<std::size_t>(v)] = std::current_exception();
        }
      }
    };

    const int workers = std::clamp(options.threads, 1, p);
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
    out.converged = true;
    for (const SeasonFit& fit : out.seasons) out.converged = out.converged && fit.converged;
  } else {
    const auto value = [&engine](const Vector& x, Vector* g) {
      return engine.joint_value(x, g);
    };
    const MinimizeResult res =
        minimize_bfgs(negated_objective(value, analytic), init, box, options.optimizer);
    gamma = res.x;
    out.converged = res.converged;
  }

  out.gamma = gamma;
  out.loglik = engine.joint_value(gamma, nullptr);
  out.model = layout.unpack(gamma);
  return out;
}

ReconstructedKernels reconstruct_kernels(const FitResult& fit, int lags) {
  if (!fit.model.has_value()) throw config_error("reconstruct: fit carries no model");
  const ParamLayout& layout = fit.layout;
  if (layout.kind == LayoutKind::trig_network) {
    throw config_error("reconstruct: real-period fits expose their kernel directly");
  }
  const PeriodicKernel& kernel = fit.model->kernel();
  const int p = kernel.seasons();
  const int reach = lags > 0 ? lags : kernel.effective_lags();

  ReconstructedKernels out;
  out.seasons = p;
  out.lags = reach;
  out.matrices.assign(static_cast<std::size_t>(p), {});
  for (int v = 1; v <= p; ++v) {
    auto& season = out.matrices[static_cast<std::size_t>(v - 1)];
    season.reserve(static_cast<std::size_t>(reach));
    for (int k = 1; k <= reach; ++k) season.push_back(kernel.eval(v, k));
  }

  if (layout.kind == LayoutKind::network_exp_poly) {
    const std::vector<double> decay = decay_factors(layout.q, layout.tau, layout.family);
    const int block = layout.season_block();
    out.self.assign(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(reach), 0.0));
    out.neighbor = out.self;
    for (int v = 0; v < p; ++v) {
      const std::int64_t off = static_cast<std::int64_t>(v) * block;
      for (int k = 1; k <= reach; ++k) {
        double a = 0.0, b = 0.0;
        for (int m = 0; m < layout.q; ++m) {
          const double weight = std::pow(decay[static_cast<std::size_t>(m)], k);
          a += fit.gamma[off + 1 + m] * weight;
          b += fit.gamma[off + 1 + layout.q + m] * weight;
        }
        out.self[static_cast<std::size_t>(v)][static_cast<std::size_t>(k - 1)] = a;
        out.neighbor[static_cast<std::size_t>(v)][static_cast<std::size_t>(k - 1)] = b;
      }
    }
  } else if (layout.kind == LayoutKind::lagged_network) {
    const auto& k = kernel.as_network();
    out.self.assign(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(reach), 0.0));
    out.neighbor = out.self;
    for (int v = 0; v < p; ++v) {
      for (int g = 0; g < std::min(reach, layout.lags); ++g) {
        out.self[static_cast<std::size_t>(v)][static_cast<std::size_t>(g)] =
            k.alpha[static_cast<std::size_t>(v)][static_cast<std::size_t>(g)];
        out.neighbor[static_cast<std::size_t>(v)][static_cast<std::size_t>(g)] =
            k.beta[static_cast<std::size_t>(v)][static_cast<std::size_t>(g)];
      }
    }
  }
  return out;
}

Json fit_to_json(const FitResult& fit) {
  Json j;
  j["layout"] = layout_to_json(fit.layout);
  j["gamma"] = std::vector<double>(fit.gamma.data(), fit.gamma.data() + fit.gamma.size());
  j["loglik"] = fit.loglik;
  j["init_loglik"] = fit.init_loglik;
  j["parameter_count"] = fit.parameter_count;
  j["observation_count"] = fit.observation_count;
  j["converged"] = fit.converged;
  j["gradient_analytic"] = fit.gradient_analytic;
  if (!fit.seasons.empty()) {
    Json seasons = Json::array();
    for (const SeasonFit& s : fit.seasons) {
      seasons.push_back({{"season", s.season},
                         {"loglik", s.loglik},
                         {"gradient_norm", s.gradient_norm},
                         {"iterations", s.iterations},
                         {"converged", s.converged}});
    }
    j["seasons"] = std::move(seasons);
  }
  if (fit.model.has_value()) j["model"] = model_to_json(*fit.model);
  return j;
}

FitResult fit_from_json(const Json& j) {
  FitResult fit;
  fit.layout = layout_from_json(j.at("layout"));
  const auto packed = j.at("gamma").get<std::vector<double>>();
  fit.gamma = Eigen::Map<const Vector>(packed.data(), static_cast<Eigen::Index>(packed.size()));
  if (fit.gamma.size() != fit.layout.size()) {
    throw config_error("fit record: gamma length " + std::to_string(fit.gamma.size()) +
                       " does not match the layout (" + std::to_string(fit.layout.size()) + ")");
  }
  fit.loglik = j.at("loglik").get<double>();
  fit.init_loglik = j.value("init_loglik", 0.0);
  fit.parameter_count = j.value("parameter_count", fit.layout.free_parameters());
  fit.observation_count = j.value("observation_count", std::int64_t{0});
  fit.converged = j.value("converged", false);
  fit.gradient_analytic = j.value("gradient_analytic", false);
  if (j.contains("seasons")) {
    for (const Json& s : j.at("seasons")) {
      SeasonFit sf;
      sf.season = s.at("season").get<int>();
      sf.loglik = s.at("loglik").get<double>();
      sf.gradient_norm = s.value("gradient_norm", 0.0);
      sf.iterations = s.value("iterations", 0);
      sf.converged = s.value("converged", false);
      fit.seasons.push_back(sf);
    }
  }
  if (j.contains("model")) {
    fit.model = model_from_json(j.at("model"));
  } else {
    fit.model = fit.layout.unpack(fit.gamma);
  }
  return fit;
}

}  // namespace perinet
