#include "perinet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace perinet {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw config_error("fit_line: need two or more paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw config_error("fit_line: x values must not be constant");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

Vector rmse(const Matrix& predicted, const Matrix& actual) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols()) {
    throw config_error("rmse: prediction and actual shapes differ");
  }
  if (predicted.rows() == 0) throw config_error("rmse: empty error series");
  Vector out(predicted.cols());
  for (Eigen::Index j = 0; j < predicted.cols(); ++j) {
    const double mse = (predicted.col(j) - actual.col(j)).squaredNorm() /
                       static_cast<double>(predicted.rows());
    out[j] = std::sqrt(mse);
  }
  return out;
}

DmResult diebold_mariano(const std::vector<double>& errors_a,
                         const std::vector<double>& errors_b, int horizon,
                         bool harvey_correction) {
  if (errors_a.size() != errors_b.size()) {
    throw config_error("diebold_mariano: error series lengths differ");
  }
  const std::size_t n = errors_a.size();
  if (n < 4) throw config_error("diebold_mariano: need at least 4 observations");
  if (horizon < 1) throw config_error("diebold_mariano: horizon must be >= 1");

  std::vector<double> diff(n);
  for (std::size_t t = 0; t < n; ++t) {
    diff[t] = errors_a[t] * errors_a[t] - errors_b[t] * errors_b[t];
  }
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);

  bool all_zero = true;
  for (double dt : diff) all_zero = all_zero && dt == 0.0;
  if (all_zero) {
    throw numeric_error("diebold_mariano: loss differential is identically zero");
  }

  // Rectangular kernel long-run variance with h-1 lags, 1/n normalization.
  const int lags = std::min<int>(horizon - 1, static_cast<int>(n) - 1);
  double lrv = 0.0;
  for (int lag = 0; lag <= lags; ++lag) {
    double gamma = 0.0;
    for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t) {
      gamma += (diff[t] - mean) * (diff[t - static_cast<std::size_t>(lag)] - mean);
    }
    gamma /= static_cast<double>(n);
    lrv += lag == 0 ? gamma : 2.0 * gamma;
  }
  if (!(lrv > 0.0)) {
    throw numeric_error("diebold_mariano: nonpositive long-run variance of the loss differential");
  }

  DmResult result;
  result.mean_differential = mean;
  result.statistic = mean / std::sqrt(lrv / static_cast<double>(n));
  if (harvey_correction) {
    const double nn = static_cast<double>(n);
    const double h = static_cast<double>(horizon);
    const double adj = (nn + 1.0 - 2.0 * h + h * (h - 1.0) / nn) / nn;
    result.statistic *= std::sqrt(adj);
  }
  result.p_value = std::erfc(std::fabs(result.statistic) / std::numbers::sqrt2);
  return result;
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
  const std::size_t m = p_values.size();
  if (m == 0) throw config_error("bh_adjust: empty p-value list");
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw config_error("bh_adjust: p-values must lie in [0, 1]");
    }
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t rank = m; rank-- > 0;) {
    const double scaled =
        p_values[order[rank]] * static_cast<double>(m) / static_cast<double>(rank + 1);
    running = std::min(running, scaled);
    adjusted[order[rank]] = running;
  }
  return adjusted;
}

double bic(double loglik, int n_params, std::int64_t n_obs) {
  if (n_obs < 1) throw config_error("bic: observation count must be positive");
  if (n_params < 0) throw config_error("bic: parameter count must be nonnegative");
  return static_cast<double>(n_params) * std::log(static_cast<double>(n_obs)) - 2.0 * loglik;
}

}  // namespace perinet
