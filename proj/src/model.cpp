#include "perinet/model.hpp"

#include <cmath>
#include <numbers>

namespace perinet {

ModelSpec::ModelSpec(PeriodicKernel kernel, Matrix seasonal, JumpRate rate,
                     SeasonIndexing indexing, bool shared_nodes)
    : kernel_(std::move(kernel)),
      rate_(std::move(rate)),
      indexing_(indexing),
      seasonal_(std::move(seasonal)),
      shared_nodes_(shared_nodes) {
  if (!kernel_.strictly_periodic()) {
    throw config_error("ModelSpec: real-period kernel needs a real-period baseline");
  }
  if (seasonal_.rows() != kernel_.seasons()) {
    throw config_error("ModelSpec: baseline needs one row per season");
  }
  if (static_cast<int>(seasonal_.cols()) != kernel_.dimension()) {
    throw config_error("ModelSpec: baseline width must match the kernel dimension");
  }
}

ModelSpec::ModelSpec(PeriodicKernel kernel, TrigBaseline trig, JumpRate rate,
                     SeasonIndexing indexing)
    : kernel_(std::move(kernel)), rate_(std::move(rate)), indexing_(indexing), trig_(std::move(trig)) {
  if (kernel_.strictly_periodic()) {
    throw config_error("ModelSpec: real-period baseline needs a real-period kernel");
  }
  const TrigBaseline& b = *trig_;
  if (b.harmonics < 0) throw config_error("ModelSpec: baseline harmonic order must be >= 0");
  if (b.coeffs.rows() != 1 + 2 * b.harmonics) {
    throw config_error("ModelSpec: baseline needs 1 + 2*harmonics coefficient rows");
  }
  if (static_cast<int>(b.coeffs.cols()) != kernel_.dimension()) {
    throw config_error("ModelSpec: baseline width must match the kernel dimension");
  }
}

const Matrix& ModelSpec::seasonal_baseline() const {
  if (trig_) throw config_error("ModelSpec: baseline has a real period, not seasons");
  return seasonal_;
}

const TrigBaseline& ModelSpec::trig_baseline_spec() const {
  if (!trig_) throw config_error("ModelSpec: baseline is seasonal, not real-period");
  return *trig_;
}

Vector ModelSpec::baseline_at(std::int64_t t) const {
  if (!trig_) {
    const int v = season_of(t, static_cast<int>(seasonal_.rows()));
    return seasonal_.row(v - 1).transpose();
  }
  const TrigBaseline& b = *trig_;
  const double period = kernel_.period();
  Vector mu = b.coeffs.row(0).transpose();
  for (int j = 1; j <= b.harmonics; ++j) {
    const double angle = 2.0 * std::numbers::pi * j * static_cast<double>(t) / period;
    mu += std::sin(angle) * b.coeffs.row(2 * j - 1).transpose();
    mu += std::cos(angle) * b.coeffs.row(2 * j).transpose();
  }
  return mu;
}

std::vector<std::string> validate_model(const ModelSpec& spec) {
  std::vector<std::string> issues;
  if (spec.jump_rate().kind() == JumpRateKind::identity) {
    // With the identity rate the pre-intensity is the intensity, so every
    // ingredient must be nonnegative or the process can leave its domain.
    bool negative_kernel = false;
    const auto& kernel = spec.kernel();
    if (kernel.strictly_periodic()) {
      const int probe = std::min(kernel.effective_lags(), 200);
      for (int v = 1; v <= kernel.seasons() && !negative_kernel; ++v) {
        for (int lag = 1; lag <= probe && !negative_kernel; ++lag) {
          negative_kernel = (kernel.eval(v, lag).minCoeff() < 0.0);
        }
      }
      if (spec.seasonal_baseline().minCoeff() < 0.0) {
        issues.push_back("identity jump rate with a negative baseline entry");
      }
    }
    if (negative_kernel) {
      issues.push_back("identity jump rate with negative kernel entries");
    }
  }
  if (spec.jump_rate().floor() < 0.0) {
    issues.push_back("jump rate floor is negative");
  }
  return issues;
}

void validate_series(const CountSeries& series) {
  if (series.counts.rows() == 0 || series.counts.cols() == 0) {
    throw config_error("CountSeries: counts must be nonempty");
  }
  for (Eigen::Index t = 0; t < series.counts.rows(); ++t) {
    for (Eigen::Index i = 0; i < series.counts.cols(); ++i) {
      if (series.counts(t, i) < 0) {
        throw config_error("CountSeries: negative count at step " + std::to_string(t + 1) +
                           ", node " + std::to_string(i + 1));
      }
    }
  }
  if (series.intensities.size() != 0 &&
      (series.intensities.rows() != series.counts.rows() ||
       series.intensities.cols() != series.counts.cols())) {
    throw config_error("CountSeries: intensity shape does not match counts");
  }
  if (!series.node_names.empty() &&
      static_cast<Eigen::Index>(series.node_names.size()) != series.counts.cols()) {
    throw config_error("CountSeries: node name count does not match counts");
  }
}

}  // namespace perinet
