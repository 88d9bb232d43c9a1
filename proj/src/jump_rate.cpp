#include "perinet/jump_rate.hpp"

#include <algorithm>
#include <cmath>

namespace perinet {

namespace {

double softplus_value(double x) {
  // Overflow-safe: log(1 + e^x) = max(x, 0) + log1p(e^{-|x|}).
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse of softplus: log(e^y - 1), stable for both tails.
double softplus_inverse(double y) {
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

}  // namespace

JumpRate JumpRate::identity() { return JumpRate(JumpRateKind::identity, 1.0, 0.0); }

JumpRate JumpRate::softplus() { return JumpRate(JumpRateKind::softplus, 1.0, 0.0); }

JumpRate JumpRate::softplus_offset(double floor) {
  if (!(floor > 0.0)) {
    throw config_error("JumpRate: softplus_offset floor must be positive");
  }
  return JumpRate(JumpRateKind::softplus_offset, 1.0, floor);
}

JumpRate JumpRate::custom(std::vector<double> xs, std::vector<double> ys,
                          double lipschitz, double floor) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw config_error("JumpRate: custom table needs at least two matching points");
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw config_error("JumpRate: custom xs must increase strictly");
    if (ys[i] < ys[i - 1]) throw config_error("JumpRate: custom ys must be nondecreasing");
  }
  if (!(lipschitz > 0.0)) throw config_error("JumpRate: Lipschitz constant must be positive");
  JumpRate rate(JumpRateKind::custom, lipschitz, floor);
  rate.xs_ = std::move(xs);
  rate.ys_ = std::move(ys);
  return rate;
}

double JumpRate::operator()(double x) const {
  switch (kind_) {
    case JumpRateKind::identity:
      return x;
    case JumpRateKind::softplus:
      return softplus_value(x);
    case JumpRateKind::softplus_offset:
      return softplus_value(x) + floor_;
    case JumpRateKind::custom: {
      if (x <= xs_.front()) {
        const double slope = (ys_[1] - ys_[0]) / (xs_[1] - xs_[0]);
        return std::max(floor_, ys_.front() + slope * (x - xs_.front()));
      }
      if (x >= xs_.back()) {
        const std::size_t n = xs_.size();
        const double slope = (ys_[n - 1] - ys_[n - 2]) / (xs_[n - 1] - xs_[n - 2]);
        return ys_.back() + slope * (x - xs_.back());
      }
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      const std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
      const double w = (x - xs_[hi - 1]) / (xs_[hi] - xs_[hi - 1]);
      return ys_[hi - 1] + w * (ys_[hi] - ys_[hi - 1]);
    }
  }
  return x;
}

double JumpRate::derivative(double x) const {
  switch (kind_) {
    case JumpRateKind::identity:
      return 1.0;
    case JumpRateKind::softplus:
    case JumpRateKind::softplus_offset:
      return sigmoid(x);
    case JumpRateKind::custom: {
      const double h = 1e-6 * (1.0 + std::fabs(x));
      return ((*this)(x + h) - (*this)(x - h)) / (2.0 * h);
    }
  }
  return 1.0;
}

double JumpRate::inverse(double y) const {
  switch (kind_) {
    case JumpRateKind::identity:
      return y;
    case JumpRateKind::softplus:
      if (!(y > 0.0)) throw config_error("JumpRate: softplus inverse needs y > 0");
      return softplus_inverse(y);
    case JumpRateKind::softplus_offset:
      if (!(y > floor_)) {
        throw config_error("JumpRate: softplus_offset inverse needs y above the floor");
      }
      return softplus_inverse(y - floor_);
    case JumpRateKind::custom: {
      if (y <= ys_.front()) return xs_.front();
      if (y >= ys_.back()) return xs_.back();
      const auto it = std::upper_bound(ys_.begin(), ys_.end(), y);
      const std::size_t hi = static_cast<std::size_t>(it - ys_.begin());
      if (ys_[hi] == ys_[hi - 1]) return xs_[hi - 1];
      const double w = (y - ys_[hi - 1]) / (ys_[hi] - ys_[hi - 1]);
      return xs_[hi - 1] + w * (xs_[hi] - xs_[hi - 1]);
    }
  }
  return y;
}

std::string JumpRate::name() const {
  switch (kind_) {
    case JumpRateKind::identity:
      return "identity";
    case JumpRateKind::softplus:
      return "softplus";
    case JumpRateKind::softplus_offset:
      return "softplus_offset";
    case JumpRateKind::custom:
      return "custom";
  }
  return "unknown";
}

}  // namespace perinet
