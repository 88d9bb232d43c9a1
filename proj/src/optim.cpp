#include "perinet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace perinet {

BoxBounds BoxBounds::unbounded(Eigen::Index n) {
  BoxBounds b;
  b.lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  b.upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  return b;
}

Vector BoxBounds::clamp(const Vector& x) const {
  if (lower.size() != x.size() || upper.size() != x.size()) {
    throw config_error("BoxBounds: bound width does not match the point");
  }
  return x.cwiseMax(lower).cwiseMin(upper);
}

MinimizeResult minimize_bfgs(
    const std::function<double(const Vector&, Vector* grad)>& objective, Vector start,
    const BoxBounds& bounds, const MinimizeOptions& opts) {
  const Eigen::Index n = start.size();
  Vector x = bounds.clamp(start);
  Vector g(n);
  double f = objective(x, &g);
  if (!std::isfinite(f)) {
    throw numeric_error("minimize: objective is not finite at the starting point");
  }

  Matrix h = Matrix::Identity(n, n);
  MinimizeResult result;
  constexpr double kArmijo = 1e-4;

  auto projected_gradient_norm = [&](const Vector& point, const Vector& grad) {
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool pinned_low = point[i] <= bounds.lower[i] && grad[i] > 0.0;
      const bool pinned_high = point[i] >= bounds.upper[i] && grad[i] < 0.0;
      if (!pinned_low && !pinned_high) norm2 += grad[i] * grad[i];
    }
    return std::sqrt(norm2);
  };

  int it = 0;
  int stalled = 0;
  bool fresh_restart = false;
  for (; it < opts.max_iterations; ++it) {
    result.gradient_norm = projected_gradient_norm(x, g);
    if (result.gradient_norm <= opts.gradient_tol * (1.0 + std::fabs(f))) {
      result.converged = true;
      break;
    }

    Vector dir = -(h * g);
    bool steepest = false;
    if (dir.dot(g) >= 0.0) {
      // Curvature approximation lost descent; restart from steepest descent.
      h.setIdentity();
      dir = -g;
      steepest = true;
    }

    double step = 1.0;
    Vector xn;
    double fn = std::numeric_limits<double>::infinity();
    auto line_search = [&](const Vector& direction) {
      step = 1.0;
      while (step >= 1e-14) {
        xn = bounds.clamp(x + step * direction);
        const Vector displacement = xn - x;
        if (displacement.norm() == 0.0) return false;
        fn = objective(xn, nullptr);
        if (std::isfinite(fn) && fn <= f + kArmijo * g.dot(displacement)) return true;
        step *= 0.5;
      }
      return false;
    };
    bool accepted = line_search(dir);
    if (!accepted && !steepest) {
      // A badly scaled curvature model can defeat backtracking even when the
      // surface still slopes; steepest descent decides whether we are done.
      h.setIdentity();
      dir = -g;
      accepted = line_search(dir);
    }
    if (!accepted) break;

    Vector gn(n);
    fn = objective(xn, &gn);
    const Vector s = xn - x;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    const bool clipped = ((x + step * dir) - xn).norm() > 0.0;
    if (clipped) {
      h.setIdentity();  // projection bends the step; stale curvature misleads
    } else if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix outer = Matrix::Identity(n, n) - rho * s * y.transpose();
      h = outer * h * outer.transpose() + rho * s * s.transpose();
    }
    const bool progressed = f - fn > opts.value_tol * (1.0 + std::fabs(f));
    x = std::move(xn);
    f = fn;
    g = std::move(gn);
    if (progressed) {
      stalled = 0;
      fresh_restart = false;
    } else if (++stalled >= opts.stall_limit) {
      // Micro-steps can mean a misscaled curvature model rather than an
      // optimum; one fresh start decides which. A second stall is the
      // numerical floor of the objective.
      if (!fresh_restart) {
        h.setIdentity();
        fresh_restart = true;
        stalled = 0;
      } else {
        ++it;
        result.converged = true;
        break;
      }
    }
  }

  result.x = x;
  result.value = f;
  result.iterations = it;
  result.gradient_norm = projected_gradient_norm(x, g);
  if (!result.converged) {
    result.converged = result.gradient_norm <= opts.gradient_tol * (1.0 + std::fabs(f));
  }
  return result;
}

SimplexResult minimize_simplex(const std::function<double(const Vector&)>& objective,
                               Vector start, const SimplexOptions& opts) {
  const Eigen::Index n = start.size();
  if (n == 0) throw config_error("minimize_simplex: empty parameter vector");

  std::vector<Vector> vertex;
  std::vector<double> value;
  vertex.reserve(static_cast<std::size_t>(n) + 1);
  vertex.push_back(start);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector v = start;
    v[i] += opts.step * std::max(1.0, std::fabs(start[i]));
    vertex.push_back(std::move(v));
  }
  for (const Vector& v : vertex) value.push_back(objective(v));
  if (!std::isfinite(value.front())) {
    throw numeric_error("minimize_simplex: objective is not finite at the starting point");
  }

  std::vector<std::size_t> order(vertex.size());
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
  };

  SimplexResult result;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    sort_vertices();
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];
    if (std::isfinite(value[worst]) &&
        value[worst] - value[best] <= opts.tol * (1.0 + std::fabs(value[best]))) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(n);
    for (std::size_t k : order) {
      if (k != worst) centroid += vertex[k];
    }
    centroid /= static_cast<double>(n);

    const Vector reflected = centroid + (centroid - vertex[worst]);
    const double f_reflected = objective(reflected);
    if (f_reflected < value[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - vertex[worst]);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second_worst]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < value[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid - 0.5 * (centroid - vertex[worst]));
    const double f_contracted = objective(contracted);
    if (f_contracted < std::min(f_reflected, value[worst])) {
      vertex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t k : order) {
      if (k == best) continue;
      vertex[k] = vertex[best] + 0.5 * (vertex[k] - vertex[best]);
      value[k] = objective(vertex[k]);
    }
  }

  sort_vertices();
  result.x = vertex[order.front()];
  result.value = value[order.front()];
  result.iterations = it;
  return result;
}

}  // namespace perinet
