#pragma once

// Builders shared by the test binaries. Test-side randomness comes from
// std::mt19937_64 so expected values never depend on the library's own
// streams.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "perinet/model.hpp"
#include "perinet/simulate.hpp"
#include "perinet/stability.hpp"

namespace testutil {

using namespace perinet;

inline Matrix scalar(double x) {
  Matrix m(1, 1);
  m(0, 0) = x;
  return m;
}

// Univariate dense kernel from per-season lag lists.
inline PeriodicKernel scalar_kernel(const std::vector<std::vector<double>>& lags) {
  GeneralKernel k;
  k.p = static_cast<int>(lags.size());
  std::size_t width = 0;
  for (const auto& season : lags) width = std::max(width, season.size());
  for (const auto& season : lags) {
    std::vector<Matrix> row;
    for (std::size_t i = 0; i < width; ++i) {
      row.push_back(scalar(i < season.size() ? season[i] : 0.0));
    }
    k.phi.push_back(std::move(row));
  }
  return PeriodicKernel(std::move(k));
}

inline ModelSpec scalar_model(const std::vector<std::vector<double>>& lags,
                              const std::vector<double>& mu,
                              JumpRate rate = JumpRate::identity(),
                              SeasonIndexing indexing = SeasonIndexing::by_target) {
  Matrix base(static_cast<Eigen::Index>(mu.size()), 1);
  for (std::size_t v = 0; v < mu.size(); ++v) base(static_cast<Eigen::Index>(v), 0) = mu[v];
  return ModelSpec(scalar_kernel(lags), std::move(base), std::move(rate), indexing);
}

// Univariate geometric-decay kernel, coef[v][m-1].
inline PeriodicKernel scalar_exp_poly(int q, double tau, ExponentFamily family,
                                      const std::vector<std::vector<double>>& coef) {
  ExpPolyKernel k;
  k.p = static_cast<int>(coef.size());
  k.q = q;
  k.tau = tau;
  k.family = family;
  for (const auto& season : coef) {
    std::vector<Matrix> row;
    for (double c : season) row.push_back(scalar(c));
    k.coef.push_back(std::move(row));
  }
  return PeriodicKernel(std::move(k));
}

inline ModelSpec scalar_exp_poly_model(int q, double tau, ExponentFamily family,
                                       const std::vector<std::vector<double>>& coef,
                                       const std::vector<double>& mu,
                                       JumpRate rate = JumpRate::identity(),
                                       SeasonIndexing indexing = SeasonIndexing::by_target) {
  Matrix base(static_cast<Eigen::Index>(mu.size()), 1);
  for (std::size_t v = 0; v < mu.size(); ++v) base(static_cast<Eigen::Index>(v), 0) = mu[v];
  return ModelSpec(scalar_exp_poly(q, tau, family, coef), std::move(base), std::move(rate),
                   indexing);
}

inline NetworkSpec mutual_pair() {
  Eigen::MatrixXi adj(2, 2);
  adj << 0, 1, 1, 0;
  return NetworkSpec(adj);
}

inline NetworkSpec directed_ring(int d) {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(d, d);
  for (int i = 0; i < d; ++i) adj(i, (i + 1) % d) = 1;
  return NetworkSpec(adj);
}

// Dense twin of a geometric-decay kernel, sampled at lags 1..reach.
inline PeriodicKernel dense_twin(const PeriodicKernel& source, int reach = 0) {
  if (reach <= 0) reach = source.effective_lags();
  GeneralKernel k;
  k.p = source.seasons();
  for (int v = 1; v <= k.p; ++v) {
    std::vector<Matrix> row;
    for (int lag = 1; lag <= reach; ++lag) row.push_back(source.eval(v, lag));
    k.phi.push_back(std::move(row));
  }
  return PeriodicKernel(std::move(k));
}

// Random stable geometric-decay model. Identity-rate draws keep every
// coefficient nonnegative; the others mix signs.
inline ModelSpec random_geometric_model(std::mt19937_64& gen, int max_dim = 5) {
  std::uniform_int_distribution<int> dim_pick(1, max_dim);
  std::uniform_int_distribution<int> season_pick(1, 4);
  std::uniform_int_distribution<int> q_pick(1, 4);
  std::uniform_real_distribution<double> tau_pick(1.0, 8.0);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> rate_pick(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int d = dim_pick(gen);
  const int p = season_pick(gen);
  const int q = q_pick(gen);
  const double tau = tau_pick(gen);
  const ExponentFamily family = coin(gen) ? ExponentFamily::odd : ExponentFamily::all;
  const SeasonIndexing indexing =
      coin(gen) ? SeasonIndexing::by_target : SeasonIndexing::by_source;
  const int rate_kind = rate_pick(gen);
  JumpRate rate = rate_kind == 0   ? JumpRate::identity()
                  : rate_kind == 1 ? JumpRate::softplus()
                                   : JumpRate::softplus_offset(0.1);
  const bool nonnegative = rate_kind == 0;

  ExpPolyKernel kernel;
  kernel.p = p;
  kernel.q = q;
  kernel.tau = tau;
  kernel.family = family;
  kernel.coef.assign(static_cast<std::size_t>(p),
                     std::vector<Matrix>(static_cast<std::size_t>(q)));
  const double span = 0.6 / (q * d);
  for (auto& season : kernel.coef) {
    for (Matrix& g : season) {
      g = Matrix::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          const double u = unit(gen);
          g(i, j) = nonnegative ? span * u : span * (2.0 * u - 1.0);
        }
      }
    }
  }

  PeriodicKernel packed{kernel};
  const double rho = check_global(packed, rate.lipschitz()).rho;
  if (rho >= 0.9) {
    const double scale = 0.8 / rho;
    for (auto& season : kernel.coef) {
      for (Matrix& g : season) g *= scale;
    }
    packed = PeriodicKernel{kernel};
  }

  Matrix base(p, d);
  for (int v = 0; v < p; ++v) {
    for (int i = 0; i < d; ++i) {
      base(v, i) = nonnegative ? 0.5 + 1.5 * unit(gen) : -0.5 + 2.0 * unit(gen);
    }
  }
  return ModelSpec(std::move(packed), std::move(base), std::move(rate), indexing);
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testutil
