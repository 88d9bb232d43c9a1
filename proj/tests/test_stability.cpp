#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "perinet/stability.hpp"

using namespace perinet;

namespace {

// Independent oracle: dense QR eigensolver, max eigenvalue modulus.
double qr_radius(const Matrix& a) {
  Eigen::EigenSolver<Matrix> solver(a);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("spectral radius on pinned matrices") {
  Matrix a(2, 2);
  a << 0.5, 0.2, 0.1, 0.4;
  // Roots of x^2 - 0.9 x + 0.18: 0.6 and 0.3.
  CHECK(spectral_radius(a) == doctest::Approx(0.6).epsilon(1e-10));

  CHECK(spectral_radius(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-10));
  Matrix nil = Matrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  CHECK(spectral_radius(nil) <= 1e-8);
  CHECK(spectral_radius(Matrix::Constant(1, 1, 0.7)) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(spectral_radius(Matrix::Zero(3, 3)) <= 1e-12);
}

TEST_CASE("spectral radius matches closed form on random 2x2 matrices") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> entry(0.0, 2.0);
  for (int round = 0; round < 60; ++round) {
    Matrix a(2, 2);
    a << entry(gen), entry(gen), entry(gen), entry(gen);
    const double tr = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    // Nonnegative entries make the dominant eigenvalue real.
    const double want = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
    CHECK(spectral_radius(a) == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("spectral radius matches the QR oracle on random matrices") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> entry(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 4);
  for (int round = 0; round < 100; ++round) {
    const int d = dim(gen);
    Matrix a(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) = entry(gen);
    }
    const double want = qr_radius(a);
    CHECK(std::fabs(spectral_radius(a) - want) <= 1e-8 * (1.0 + want));
  }
}

TEST_CASE("domination sequence aggregates the kernel envelope") {
  const PeriodicKernel kernel = testutil::scalar_kernel({{0.5, -0.25}, {0.1, 0.0}});
  const DominationSequence seq = DominationSequence::from_kernel(kernel, 2.0);
  REQUIRE(seq.horizon() == 2);
  // Seasonwise max of |phi|, scaled by the Lipschitz constant.
  CHECK(seq.terms()[0](0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(seq.terms()[1](0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(seq.total()(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK((seq.tilted_total(0.0) - seq.total()).cwiseAbs().maxCoeff() == 0.0);
  const double tilted = seq.tilted_total(0.3)(0, 0);
  CHECK(tilted ==
        doctest::Approx(std::exp(0.3) * 1.0 + std::exp(0.6) * 0.5).epsilon(1e-14));
  // Overflowing tilts clamp instead of producing inf.
  CHECK(seq.tilted_total(500.0).maxCoeff() <= 1e100);
}

TEST_CASE("global condition on the two-node example") {
  // alpha_k = 0.3 * 2^-k, beta_k = 0.1 * 2^-k: lag sums 0.3 and 0.1.
  NetworkKernel kernel;
  kernel.p = 1;
  kernel.network = testutil::mutual_pair();
  kernel.alpha.assign(1, std::vector<double>(40, 0.0));
  kernel.beta = kernel.alpha;
  for (int k = 1; k <= 40; ++k) {
    kernel.alpha[0][k - 1] = 0.3 * std::pow(2.0, -k);
    kernel.beta[0][k - 1] = 0.1 * std::pow(2.0, -k);
  }
  const StabilityVerdict verdict = check_global(PeriodicKernel{kernel}, 1.0);
  CHECK(verdict.mode == "global");
  CHECK(verdict.rho == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(verdict.stable);

  const StabilityVerdict unstable =
      check_global(testutil::scalar_kernel({{1.5}}), 1.0);
  CHECK(unstable.rho == doctest::Approx(1.5).epsilon(1e-8));
  CHECK_FALSE(unstable.stable);

  const StabilityVerdict zero = check_global(testutil::scalar_kernel({{0.0}}), 1.0);
  CHECK(zero.rho <= 1e-12);
  CHECK(zero.stable);

  // A margin tightens the verdict without changing rho.
  StabilityOptions opts;
  opts.margin = 0.7;
  const StabilityVerdict close = check_global(PeriodicKernel{kernel}, 1.0, opts);
  CHECK(close.rho == doctest::Approx(0.4).epsilon(1e-6));
  CHECK_FALSE(close.stable);
}

TEST_CASE("season-by-season condition is sharper than the global one") {
  // |phi| alternates 2.0 and 0.3: unstable for the envelope, stable over a
  // full period since the product contracts.
  const PeriodicKernel kernel = testutil::scalar_kernel({{2.0}, {0.3}});
  const StabilityVerdict global = check_global(kernel, 1.0);
  CHECK(global.rho == doctest::Approx(2.0).epsilon(1e-8));
  CHECK_FALSE(global.stable);

  const StabilityVerdict periodic = check_periodic(kernel, 1.0);
  CHECK(periodic.mode == "periodic");
  CHECK(periodic.rho == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(periodic.stable);
}

TEST_CASE("constant kernels contract by the same factor every season") {
  const PeriodicKernel kernel = testutil::scalar_kernel({{0.5}, {0.5}, {0.5}});
  const StabilityVerdict verdict = check_periodic(kernel, 1.0);
  CHECK(verdict.rho == doctest::Approx(0.125).epsilon(1e-6));
  CHECK(verdict.stable);
}

TEST_CASE("periodic check of a geometric kernel matches its dense twin") {
  const PeriodicKernel geo = testutil::scalar_exp_poly(
      2, 3.0, ExponentFamily::odd, {{0.4, -0.1}, {0.2, 0.05}});
  const PeriodicKernel dense = testutil::dense_twin(geo);
  const double a = check_periodic(geo, 1.0).rho;
  const double b = check_periodic(dense, 1.0).rho;
  CHECK(std::fabs(a - b) <= 1e-6 * (1.0 + b));
  const double ga = check_global(geo, 1.0).rho;
  const double gb = check_global(dense, 1.0).rho;
  CHECK(std::fabs(ga - gb) <= 1e-6 * (1.0 + gb));
}

TEST_CASE("real-period kernels are rejected by the periodic check") {
  TrigExpPolyKernel kernel;
  kernel.period = 52.18;
  kernel.harmonics = 1;
  kernel.q = 1;
  kernel.tau = 3.0;
  kernel.network = testutil::mutual_pair();
  kernel.self = {{0.1, 0.0, 0.0}};
  kernel.neighbor = {{0.05, 0.0, 0.0}};
  CHECK_THROWS_AS(check_periodic(PeriodicKernel{kernel}, 1.0), config_error);
  CHECK_NOTHROW(check_global(PeriodicKernel{kernel}, 1.0));
}

TEST_CASE("decay classification: exponential envelope with closed-form tilt") {
  // A_k = 0.5 e^-k; the tilt budget solves 0.5 e^{d-1}/(1-e^{d-1}) = 1.
  const PeriodicKernel kernel =
      testutil::scalar_exp_poly(1, 1.0, ExponentFamily::all, {{0.5}});
  const DominationSequence seq = DominationSequence::from_kernel(kernel, 1.0);
  const DecayInfo info = classify_decay(seq);
  CHECK(info.kind == DecayClass::exponential);
  const double want = 1.0 - std::log(1.5);
  CHECK(std::fabs(info.rate - want) <= 1e-3);
  // The verdict carries the same classification.
  const Matrix base = Matrix::Ones(1, 1);
  const ModelSpec spec(kernel, base, JumpRate::identity(), SeasonIndexing::by_target);
  const StabilityVerdict verdict = check_global(spec);
  REQUIRE(verdict.decay.has_value());
  CHECK(verdict.decay->kind == DecayClass::exponential);
  CHECK(std::fabs(verdict.decay->rate - want) <= 1e-3);
}

TEST_CASE("decay classification: polynomial tail exponent") {
  // A_k = 0.1 k^-4 ~ k^{-2(1+beta)} with beta = 1.
  std::vector<std::vector<double>> lags(1);
  for (int k = 1; k <= 400; ++k) lags[0].push_back(0.1 / std::pow(k, 4.0));
  const DominationSequence seq =
      DominationSequence::from_kernel(testutil::scalar_kernel(lags), 1.0);
  const DecayInfo info = classify_decay(seq);
  CHECK(info.kind == DecayClass::polynomial);
  CHECK(info.rate == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(info.fit_r2 >= 0.99);
}

TEST_CASE("decay classification: zero and irregular sequences") {
  const DominationSequence zero =
      DominationSequence::from_kernel(testutil::scalar_kernel({{0.0, 0.0}}), 1.0);
  const DecayInfo info = classify_decay(zero);
  CHECK(info.kind == DecayClass::exponential);
  CHECK(std::isinf(info.rate));

  // Alternating envelope fits neither profile at the default threshold.
  std::vector<std::vector<double>> rough(1);
  for (int k = 1; k <= 60; ++k) {
    rough[0].push_back(0.2 * std::exp(-0.2 * k) * (k % 2 == 0 ? 1.9 : 0.1));
  }
  const DominationSequence seq =
      DominationSequence::from_kernel(testutil::scalar_kernel(rough), 1.0);
  CHECK(classify_decay(seq).kind == DecayClass::unclassified);
}

TEST_CASE("tilted envelope stays contractive at the reported rate") {
  const PeriodicKernel kernel = testutil::scalar_exp_poly(
      2, 2.5, ExponentFamily::odd, {{0.3, 0.1}, {0.2, 0.0}});
  const DominationSequence seq = DominationSequence::from_kernel(kernel, 1.0);
  const DecayInfo info = classify_decay(seq);
  REQUIRE(info.kind == DecayClass::exponential);
  REQUIRE(std::isfinite(info.rate));
  CHECK(spectral_radius(seq.tilted_total(info.rate)) < 1.0);
  CHECK(spectral_radius(seq.tilted_total(info.rate + 5e-3)) >= 1.0);
}

TEST_CASE("solution bounds for driven recursions") {
  const DominationSequence seq{std::vector<Matrix>{testutil::scalar(0.5)}};
  // b_t = 1 + 0.5 b_{t-1} -> 2 - 2^{1-t}.
  const std::vector<Vector> bounds =
      convolution_bound(seq, std::vector<Vector>(30, Vector::Ones(1)));
  REQUIRE(bounds.size() == 30);
  CHECK(bounds[0](0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bounds[1](0) == doctest::Approx(1.5).epsilon(1e-14));
  for (std::size_t t = 1; t < bounds.size(); ++t) CHECK(bounds[t](0) >= bounds[t - 1](0));
  CHECK(bounds[29](0) == doctest::Approx(2.0).epsilon(1e-8));

  CHECK(convolution_bound_constant(seq, Vector::Ones(1))(0) ==
        doctest::Approx(2.0).epsilon(1e-10));

  Matrix s(2, 2);
  s << 0.5, 0.2, 0.1, 0.4;
  const DominationSequence pair{std::vector<Matrix>{s}};
  const Vector fixed = convolution_bound_constant(pair, Vector::Ones(2));
  CHECK(fixed(0) == doctest::Approx(0.8 / 0.28).epsilon(1e-10));
  CHECK(fixed(1) == doctest::Approx(0.6 / 0.28).epsilon(1e-10));

  // Zero kernel: the bound is the driver itself.
  const DominationSequence none{std::vector<Matrix>{Matrix::Zero(1, 1)}};
  const std::vector<Vector> flat =
      convolution_bound(none, std::vector<Vector>(5, Vector::Constant(1, 3.0)));
  for (const Vector& b : flat) CHECK(b(0) == 3.0);
}

TEST_CASE("expanding the envelope cannot shrink the radius") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> entry(0.0, 0.4);
  for (int round = 0; round < 40; ++round) {
    Matrix a(3, 3), extra(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        a(i, j) = entry(gen);
        extra(i, j) = entry(gen);
      }
    }
    CHECK(spectral_radius(a) <= spectral_radius(a + extra) + 1e-10);
  }
}
