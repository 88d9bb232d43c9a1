#include "perinet/simulate.hpp"

#include <cmath>

namespace perinet {

namespace {

std::uint64_t time_key(std::int64_t t) { return static_cast<std::uint64_t>(t); }

void throw_if_invalid(const ModelSpec& spec) {
  const std::vector<std::string> issues = validate_model(spec);
  if (!issues.empty()) {
    std::string msg = "simulate: model failed validation:";
    for (const auto& issue : issues) msg += "\n  - " + issue;
    throw config_error(msg);
  }
}

std::int64_t period_steps(const ModelSpec& spec) {
  if (spec.kernel().strictly_periodic()) return spec.kernel().seasons();
  return static_cast<std::int64_t>(std::llround(spec.kernel().period()));
}

// Materialized kernel matrices for strictly periodic kernels; real-period
// kernels are evaluated per call into a scratch slot.
class KernelTable {
 public:
  KernelTable(const PeriodicKernel& kernel, int max_lag)
      : kernel_(kernel), zero_(Matrix::Zero(kernel.dimension(), kernel.dimension())) {
    reach_ = std::min(max_lag, kernel.effective_lags());
    if (kernel_.strictly_periodic()) {
      const int p = kernel_.seasons();
      table_.reserve(static_cast<std::size_t>(p) * static_cast<std::size_t>(reach_));
      for (int v = 1; v <= p; ++v) {
        for (int lag = 1; lag <= reach_; ++lag) table_.push_back(kernel_.eval(v, lag));
      }
    }
  }

  int reach() const { return reach_; }

  const Matrix& get(std::int64_t t, int lag) {
    if (lag > reach_) return zero_;
    if (kernel_.strictly_periodic()) {
      const int v = season_of(t, kernel_.seasons());
      return table_[static_cast<std::size_t>(v - 1) * static_cast<std::size_t>(reach_) +
                    static_cast<std::size_t>(lag - 1)];
    }
    scratch_ = kernel_.eval(t, lag);
    return scratch_;
  }

 private:
  const PeriodicKernel& kernel_;
  Matrix zero_;
  int reach_ = 0;
  std::vector<Matrix> table_;
  Matrix scratch_;
};

void check_history(const CountMatrix& history, int d) {
  if (history.rows() > 0 && static_cast<int>(history.cols()) != d) {
    throw config_error("simulate: history width must match the model dimension");
  }
  if (history.rows() > 0 && history.minCoeff() < 0) {
    throw config_error("simulate: history counts must be nonnegative");
  }
}

Vector intensity_from_eta(const ModelSpec& spec, const Vector& eta, std::int64_t t) {
  Vector lambda(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double value = spec.jump_rate()(eta[i]);
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw numeric_error("simulate: intensity " + std::to_string(value) + " at time " +
                          std::to_string(t) + ", node " + std::to_string(i + 1) +
                          " left the jump rate domain");
    }
    lambda[i] = value;
  }
  return lambda;
}

}  // namespace

CountSeries simulate_direct(const ModelSpec& spec, const SimulationConfig& cfg) {
  throw_if_invalid(spec);
  if (cfg.steps < 1) throw config_error("simulate: steps must be >= 1");
  if (cfg.burn_in_periods < 0) throw config_error("simulate: burn-in must be >= 0");
  const int d = spec.dimension();
  check_history(cfg.history, d);

  const std::int64_t burn_steps = cfg.burn_in_periods * period_steps(spec);
  const std::int64_t first_draw = 1 - burn_steps;
  const std::int64_t first_time = first_draw - cfg.history.rows();
  const std::int64_t rows = cfg.steps - first_time + 1;

  CountMatrix counts = CountMatrix::Zero(rows, d);
  Matrix counts_real = Matrix::Zero(rows, d);
  for (Eigen::Index h = 0; h < cfg.history.rows(); ++h) {
    counts.row(h) = cfg.history.row(h);
    counts_real.row(h) = cfg.history.row(h).cast<double>();
  }

  KernelTable table(spec.kernel(), static_cast<int>(cfg.steps - first_time));
  Matrix intensities;
  if (cfg.record_intensities) intensities = Matrix::Zero(cfg.steps, d);

  for (std::int64_t t = first_draw; t <= cfg.steps; ++t) {
    Vector eta = spec.baseline_at(t);
    const std::int64_t s_lo = std::max(first_time, t - table.reach());
    for (std::int64_t s = s_lo; s < t; ++s) {
      eta.noalias() += table.get(spec.kernel_time(t, s), static_cast<int>(t - s)) *
                       counts_real.row(s - first_time).transpose();
    }
    const Vector lambda = intensity_from_eta(spec, eta, t);
    const Eigen::Index row = t - first_time;
    for (int i = 0; i < d; ++i) {
      SubstreamRng rng(cfg.seed, StreamPurpose::counts, cfg.replicate, time_key(t),
                       static_cast<std::uint64_t>(i));
      const std::int64_t y = poisson_draw(lambda[i], rng);
      counts(row, i) = y;
      counts_real(row, i) = static_cast<double>(y);
    }
    if (cfg.record_intensities && t >= 1) intensities.row(t - 1) = lambda.transpose();
  }

  CountSeries out;
  out.counts = counts.bottomRows(cfg.steps);
  out.intensities = std::move(intensities);
  out.t0 = 1;
  return out;
}

namespace {

struct GeomBasis {
  int q = 1;
  std::vector<double> decay;  // r_m = exp(-rate_m / tau)
};

GeomBasis geom_basis(const PeriodicKernel& kernel) {
  GeomBasis basis;
  double tau = 0.0;
  ExponentFamily family = ExponentFamily::odd;
  if (kernel.kind() == KernelKind::exp_poly) {
    basis.q = kernel.as_exp_poly().q;
    tau = kernel.as_exp_poly().tau;
    family = kernel.as_exp_poly().family;
  } else if (kernel.kind() == KernelKind::trig_exp_poly) {
    basis.q = kernel.as_trig().q;
    tau = kernel.as_trig().tau;
    family = kernel.as_trig().family;
  } else {
    throw config_error("markov: kernel has no geometric-decay representation");
  }
  basis.decay.resize(static_cast<std::size_t>(basis.q));
  for (int m = 1; m <= basis.q; ++m) {
    basis.decay[static_cast<std::size_t>(m - 1)] =
        std::exp(-static_cast<double>(exponent_rate(family, m)) / tau);
  }
  return basis;
}

// eta += G_m(t) * x for the m-th coefficient of a geometric-decay kernel.
void add_coefficient_product(const PeriodicKernel& kernel, std::int64_t t, int m,
                             const Vector& x, Vector& eta) {
  if (kernel.kind() == KernelKind::exp_poly) {
    const auto& k = kernel.as_exp_poly();
    const int v = season_of(t, k.p);
    eta.noalias() +=
        k.coef[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(m - 1)] * x;
    return;
  }
  const auto& k = kernel.as_trig();
  const double td = static_cast<double>(t);
  const double a = trig_loading(k.self[static_cast<std::size_t>(m - 1)], td, k.period);
  const double b = trig_loading(k.neighbor[static_cast<std::size_t>(m - 1)], td, k.period);
  eta.noalias() += a * x + b * (k.network.weights() * x);
}

}  // namespace

MarkovState markov_state_from_history(const ModelSpec& spec, const CountMatrix& counts,
                                      std::int64_t last_time) {
  const GeomBasis basis = geom_basis(spec.kernel());
  MarkovState state;
  state.next_time = last_time - counts.rows() + 1;
  state.xi.assign(static_cast<std::size_t>(basis.q), Vector::Zero(spec.dimension()));
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    markov_advance(spec, state, counts.row(r).transpose());
  }
  return state;
}

Vector markov_intensity(const ModelSpec& spec, const MarkovState& state) {
  const GeomBasis basis = geom_basis(spec.kernel());
  Vector eta = spec.baseline_at(state.next_time);
  if (spec.indexing() == SeasonIndexing::by_target) {
    for (int m = 1; m <= basis.q; ++m) {
      add_coefficient_product(spec.kernel(), state.next_time, m,
                              state.xi[static_cast<std::size_t>(m - 1)], eta);
    }
  } else {
    for (int m = 1; m <= basis.q; ++m) eta += state.xi[static_cast<std::size_t>(m - 1)];
  }
  return intensity_from_eta(spec, eta, state.next_time);
}

void markov_advance(const ModelSpec& spec, MarkovState& state,
                    const Eigen::Ref<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>& counts) {
  const GeomBasis basis = geom_basis(spec.kernel());
  if (static_cast<int>(counts.size()) != spec.dimension()) {
    throw config_error("markov: count width must match the model dimension");
  }
  const Vector y = counts.cast<double>();
  for (int m = 1; m <= basis.q; ++m) {
    const double r = basis.decay[static_cast<std::size_t>(m - 1)];
    Vector& xi = state.xi[static_cast<std::size_t>(m - 1)];
    if (spec.indexing() == SeasonIndexing::by_target) {
      xi = r * (xi + y);
    } else {
      Vector gain = Vector::Zero(spec.dimension());
      add_coefficient_product(spec.kernel(), state.next_time, m, y, gain);
      xi = r * (xi + gain);
    }
  }
  state.next_time += 1;
}

MarkovSimResult simulate_markov(const ModelSpec& spec, const SimulationConfig& cfg) {
  throw_if_invalid(spec);
  if (cfg.steps < 1) throw config_error("simulate: steps must be >= 1");
  if (cfg.burn_in_periods < 0) throw config_error("simulate: burn-in must be >= 0");
  const int d = spec.dimension();
  check_history(cfg.history, d);

  const std::int64_t burn_steps = cfg.burn_in_periods * period_steps(spec);
  const std::int64_t first_draw = 1 - burn_steps;

  MarkovState state;
  state.next_time = first_draw;
  state.xi.assign(static_cast<std::size_t>(geom_basis(spec.kernel()).q), Vector::Zero(d));
  if (cfg.history.rows() > 0) {
    state = markov_state_from_history(spec, cfg.history, first_draw - 1);
  }

  CountMatrix counts = CountMatrix::Zero(cfg.steps, d);
  Matrix intensities;
  if (cfg.record_intensities) intensities = Matrix::Zero(cfg.steps, d);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> row(d);

  for (std::int64_t t = first_draw; t <= cfg.steps; ++t) {
    const Vector lambda = markov_intensity(spec, state);
    for (int i = 0; i < d; ++i) {
      SubstreamRng rng(cfg.seed, StreamPurpose::counts, cfg.replicate, time_key(t),
                       static_cast<std::uint64_t>(i));
      row[i] = poisson_draw(lambda[i], rng);
    }
    if (t >= 1) {
      counts.row(t - 1) = row.transpose();
      if (cfg.record_intensities) intensities.row(t - 1) = lambda.transpose();
    }
    markov_advance(spec, state, row);
  }

  MarkovSimResult out;
  out.series.counts = std::move(counts);
  out.series.intensities = std::move(intensities);
  out.series.t0 = 1;
  out.state = std::move(state);
  return out;
}

std::vector<CountSeries> simulate_coupled(const std::vector<ModelSpec>& arms,
                                          const CoupledConfig& cfg) {
  if (arms.empty()) throw config_error("simulate_coupled: need at least one arm");
  if (cfg.steps < 1) throw config_error("simulate_coupled: steps must be >= 1");
  const int d = arms.front().dimension();
  const double period = arms.front().kernel().period();
  const JumpRate& rate = arms.front().jump_rate();
  for (const ModelSpec& arm : arms) {
    throw_if_invalid(arm);
    if (arm.dimension() != d) {
      throw config_error("simulate_coupled: arms must share one dimension");
    }
    if (std::fabs(arm.kernel().period() - period) > 1e-9) {
      throw config_error("simulate_coupled: arms must share one period");
    }
    if (arm.jump_rate().kind() != rate.kind() ||
        arm.jump_rate().floor() != rate.floor() ||
        arm.jump_rate().lipschitz() != rate.lipschitz()) {
      throw config_error("simulate_coupled: arms must share one jump rate");
    }
  }
  std::vector<int> burn = cfg.burn_in_periods;
  if (burn.empty()) burn.assign(arms.size(), 0);
  if (burn.size() != arms.size()) {
    throw config_error("simulate_coupled: burn-in list must match the arm count");
  }
  int max_burn = 0;
  for (int b : burn) {
    if (b < 0) throw config_error("simulate_coupled: burn-in must be >= 0");
    max_burn = std::max(max_burn, b);
  }
  check_history(cfg.history, d);
  if (cfg.history.rows() > 0 && max_burn > 0) {
    throw config_error("simulate_coupled: shared history and burn-in arms cannot be combined");
  }

  const std::int64_t pstep = period_steps(arms.front());
  const std::int64_t first_time = 1 - static_cast<std::int64_t>(max_burn) * pstep -
                                  cfg.history.rows();
  const std::int64_t rows = cfg.steps - first_time + 1;
  const std::size_t n_arms = arms.size();

  std::vector<Matrix> counts_real(n_arms, Matrix::Zero(rows, d));
  std::vector<CountMatrix> counts(n_arms, CountMatrix::Zero(rows, d));
  std::vector<Matrix> intensities(
      n_arms, cfg.record_intensities ? Matrix::Zero(cfg.steps, d) : Matrix());
  std::vector<std::int64_t> start(n_arms);
  std::vector<KernelTable> tables;
  tables.reserve(n_arms);
  for (std::size_t a = 0; a < n_arms; ++a) {
    start[a] = 1 - static_cast<std::int64_t>(burn[a]) * pstep;
    tables.emplace_back(arms[a].kernel(), static_cast<int>(cfg.steps - first_time));
    for (Eigen::Index h = 0; h < cfg.history.rows(); ++h) {
      counts[a].row(h) = cfg.history.row(h);
      counts_real[a].row(h) = cfg.history.row(h).cast<double>();
    }
  }

  std::vector<double> levels;
  std::vector<std::size_t> active;
  for (std::int64_t t = first_time + cfg.history.rows(); t <= cfg.steps; ++t) {
    active.clear();
    levels.clear();
    std::vector<Vector> lambdas(n_arms);
    for (std::size_t a = 0; a < n_arms; ++a) {
      if (t < start[a]) continue;
      Vector eta = arms[a].baseline_at(t);
      const std::int64_t s_lo = std::max(std::max(first_time, start[a] - cfg.history.rows()),
                                         t - tables[a].reach());
      for (std::int64_t s = s_lo; s < t; ++s) {
        eta.noalias() += tables[a].get(arms[a].kernel_time(t, s), static_cast<int>(t - s)) *
                         counts_real[a].row(s - first_time).transpose();
      }
      lambdas[a] = intensity_from_eta(arms[a], eta, t);
      active.push_back(a);
    }
    const Eigen::Index row = t - first_time;
    for (int i = 0; i < d; ++i) {
      levels.clear();
      for (std::size_t a : active) levels.push_back(lambdas[a][i]);
      SubstreamRng rng(cfg.seed, StreamPurpose::counts, cfg.replicate, time_key(t),
                       static_cast<std::uint64_t>(i));
      const std::vector<std::int64_t> draws = poisson_process_counts(levels, rng);
      for (std::size_t k = 0; k < active.size(); ++k) {
        counts[active[k]](row, i) = draws[k];
        counts_real[active[k]](row, i) = static_cast<double>(draws[k]);
      }
    }
    if (cfg.record_intensities && t >= 1) {
      for (std::size_t a : active) intensities[a].row(t - 1) = lambdas[a].transpose();
    }
  }

  std::vector<CountSeries> out(n_arms);
  for (std::size_t a = 0; a < n_arms; ++a) {
    out[a].counts = counts[a].bottomRows(cfg.steps);
    out[a].intensities = std::move(intensities[a]);
    out[a].t0 = 1;
  }
  return out;
}

NetworkSpec generate_sbm(const std::vector<int>& block_sizes, const Matrix& block_probs,
                         std::uint64_t seed) {
  if (block_sizes.empty()) throw config_error("generate_sbm: need at least one block");
  int d = 0;
  for (int size : block_sizes) {
    if (size < 1) throw config_error("generate_sbm: block sizes must be positive");
    d += size;
  }
  const Eigen::Index blocks = static_cast<Eigen::Index>(block_sizes.size());
  if (block_probs.rows() != blocks || block_probs.cols() != blocks) {
    throw config_error("generate_sbm: probability matrix must be blocks x blocks");
  }
  for (Eigen::Index r = 0; r < blocks; ++r) {
    for (Eigen::Index c = 0; c < blocks; ++c) {
      const double p = block_probs(r, c);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw config_error("generate_sbm: probabilities must lie in [0, 1]");
      }
      if (block_probs(r, c) != block_probs(c, r)) {
        throw config_error("generate_sbm: probability matrix must be symmetric");
      }
    }
  }
  std::vector<int> block_of(static_cast<std::size_t>(d));
  int node = 0;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    for (int k = 0; k < block_sizes[b]; ++k) block_of[static_cast<std::size_t>(node++)] = static_cast<int>(b);
  }
  SubstreamRng rng(seed, StreamPurpose::network, 0, 0, 0);
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double p = block_probs(block_of[static_cast<std::size_t>(i)],
                                   block_of[static_cast<std::size_t>(j)]);
      if (rng.next_u01() < p) adjacency(i, j) = 1;
    }
  }
  return NetworkSpec(std::move(adjacency));
}

MomentSummary empirical_moments(const std::vector<CountSeries>& replications, int order) {
  if (replications.empty()) throw config_error("empirical_moments: need replications");
  if (order < 1) throw config_error("empirical_moments: moment order must be >= 1");
  const Eigen::Index rows = replications.front().counts.rows();
  const Eigen::Index cols = replications.front().counts.cols();
  for (const CountSeries& rep : replications) {
    if (rep.counts.rows() != rows || rep.counts.cols() != cols) {
      throw config_error("empirical_moments: replications must share one shape");
    }
  }
  const double n = static_cast<double>(replications.size());
  Matrix mean = Matrix::Zero(rows, cols);
  Matrix m2 = Matrix::Zero(rows, cols);
  for (const CountSeries& rep : replications) {
    for (Eigen::Index t = 0; t < rows; ++t) {
      for (Eigen::Index i = 0; i < cols; ++i) {
        const double x = std::pow(static_cast<double>(rep.counts(t, i)), order);
        mean(t, i) += x;
        m2(t, i) += x * x;
      }
    }
  }
  mean /= n;
  MomentSummary out;
  out.order = order;
  out.replications = static_cast<int>(replications.size());
  out.mean = mean;
  out.std_error = Matrix::Zero(rows, cols);
  if (replications.size() > 1) {
    for (Eigen::Index t = 0; t < rows; ++t) {
      for (Eigen::Index i = 0; i < cols; ++i) {
        const double var = std::max(0.0, (m2(t, i) / n - mean(t, i) * mean(t, i)) * n / (n - 1.0));
        out.std_error(t, i) = std::sqrt(var / n);
      }
    }
  }
  return out;
}

}  // namespace perinet
