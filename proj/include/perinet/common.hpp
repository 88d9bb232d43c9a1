#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace perinet {

inline constexpr const char* kLibraryVersion = "0.1.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Bad model specifications, malformed configs, and out-of-domain arguments.
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

// Failures of numerical procedures (non-convergence, degenerate statistics).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or malformed files.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Season of time index t in a p-periodic model, in 1..p. Works for t <= 0
// as well: season(0) == p, season(-1) == p - 1, and so on.
inline int season_of(std::int64_t t, int p) {
  std::int64_t r = (t - 1) % p;
  if (r < 0) r += p;
  return static_cast<int>(r) + 1;
}

}  // namespace perinet
