#pragma once

#include <functional>

#include "perinet/common.hpp"

namespace perinet {

struct BoxBounds {
  Vector lower, upper;

  static BoxBounds unbounded(Eigen::Index n);
  Vector clamp(const Vector& x) const;
};

struct MinimizeOptions {
  int max_iterations = 500;
  // Stop when the projected gradient norm falls under
  // gradient_tol * (1 + |f|).
  double gradient_tol = 1e-6;
  // Also stop (as converged) after `stall_limit` consecutive accepted steps
  // improving f by less than value_tol * (1 + |f|) each; progress that small
  // is below what the surface supports in double precision.
  double value_tol = 1e-11;
  int stall_limit = 5;
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Quasi-Newton descent with backtracking line search, iterates projected
// into the box. The objective may return +inf outside its domain; the line
// search then shrinks. Never returns a point worse than the start.
MinimizeResult minimize_bfgs(
    const std::function<double(const Vector&, Vector* grad)>& objective, Vector start,
    const BoxBounds& bounds, const MinimizeOptions& opts = {});

struct SimplexOptions {
  int max_iterations = 10000;
  double tol = 1e-10;
  // Initial vertex displacement per coordinate, relative to max(1, |x_i|).
  double step = 0.1;
};

struct SimplexResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex descent (reflection / expansion / contraction /
// shrink). The start is a vertex, so the result is never worse than it.
SimplexResult minimize_simplex(const std::function<double(const Vector&)>& objective,
                               Vector start, const SimplexOptions& opts = {});

}  // namespace perinet
