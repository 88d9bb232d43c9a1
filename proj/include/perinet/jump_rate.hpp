#pragma once

#include <string>
#include <vector>

#include "perinet/common.hpp"

namespace perinet {

enum class JumpRateKind { identity, softplus, softplus_offset, custom };

// Increasing Lipschitz map from pre-intensity to intensity. identity keeps
// lambda = x and is only valid on nonnegative pre-intensities; softplus is
// log(1 + e^x); softplus_offset adds a positive floor so intensities stay
// bounded away from zero. custom interpolates a user-supplied monotone table
// and reports itself as non-differentiable (callers fall back to finite
// differences).
class JumpRate {
 public:
  static JumpRate identity();
  static JumpRate softplus();
  static JumpRate softplus_offset(double floor);
  // xs strictly increasing, ys nondecreasing; linear interpolation inside the
  // table, linear continuation with edge slopes outside.
  static JumpRate custom(std::vector<double> xs, std::vector<double> ys,
                         double lipschitz, double floor);

  JumpRateKind kind() const { return kind_; }
  double lipschitz() const { return lipschitz_; }
  // Lower bound of the range (0 for identity/softplus, epsilon for offset).
  double floor() const { return floor_; }
  bool differentiable() const { return kind_ != JumpRateKind::custom; }

  double operator()(double x) const;
  double derivative(double x) const;
  // Inverse map; y must lie strictly above floor() except for identity.
  double inverse(double y) const;

  std::string name() const;

 private:
  JumpRate(JumpRateKind kind, double lipschitz, double floor)
      : kind_(kind), lipschitz_(lipschitz), floor_(floor) {}

  JumpRateKind kind_;
  double lipschitz_;
  double floor_;
  std::vector<double> xs_, ys_;
};

}  // namespace perinet
