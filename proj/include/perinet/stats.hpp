#pragma once

#include <vector>

#include "perinet/common.hpp"

namespace perinet {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares of y on x. Needs at least two distinct x values.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Root mean squared error per column of (predicted - actual).
Vector rmse(const Matrix& predicted, const Matrix& actual);

struct DmResult {
  double statistic = 0.0;
  double p_value = 1.0;
  // Mean of the loss differential; negative favors the first series.
  double mean_differential = 0.0;
};

// Equal-predictive-accuracy test on two squared-error series with a
// rectangular heteroskedasticity-and-autocorrelation variance using h-1
// lags and a two-sided normal p-value. harvey_correction applies the
// small-sample scale adjustment to the statistic; off by default. Throws
// numeric_error when the loss differential is degenerate (identically zero
// or with nonpositive long-run variance).
DmResult diebold_mariano(const std::vector<double>& errors_a,
                         const std::vector<double>& errors_b, int horizon,
                         bool harvey_correction = false);

// Step-up false-discovery-rate adjustment; returns adjusted p-values in the
// input order, each capped at 1.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

// k * ln(n_obs) - 2 * loglik; lower is better.
double bic(double loglik, int n_params, std::int64_t n_obs);

}  // namespace perinet
