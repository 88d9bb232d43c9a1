#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "perinet/model.hpp"
#include "perinet/serialize.hpp"

using namespace perinet;
using testutil::scalar;

TEST_CASE("season_of wraps any integer time into 1..p") {
  CHECK(season_of(1, 4) == 1);
  CHECK(season_of(4, 4) == 4);
  CHECK(season_of(5, 4) == 1);
  CHECK(season_of(12, 4) == 4);
  CHECK(season_of(0, 4) == 4);
  CHECK(season_of(-1, 4) == 3);
  CHECK(season_of(-3, 4) == 1);
  CHECK(season_of(7, 1) == 1);
  for (std::int64_t t = -20; t <= 20; ++t) {
    CHECK(season_of(t, 6) == season_of(t + 6, 6));
    CHECK(season_of(t, 6) >= 1);
    CHECK(season_of(t, 6) <= 6);
  }
}

TEST_CASE("jump rate families") {
  const JumpRate id = JumpRate::identity();
  CHECK(id(2.5) == 2.5);
  CHECK(id.derivative(1.0) == 1.0);
  CHECK(id.inverse(3.0) == 3.0);
  CHECK(id.floor() == 0.0);
  CHECK(id.lipschitz() == 1.0);
  CHECK(id.differentiable());

  const JumpRate sp = JumpRate::softplus();
  CHECK(sp(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(sp(30.0) == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(sp(-40.0) > 0.0);
  CHECK(sp.derivative(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sp.floor() == 0.0);

  const JumpRate off = JumpRate::softplus_offset(0.25);
  CHECK(off.floor() == 0.25);
  CHECK(off(0.0) == doctest::Approx(0.25 + std::log(2.0)).epsilon(1e-14));
  CHECK(off(-60.0) >= 0.25);

  // Round trips through the inverse.
  for (double x : {-3.0, -0.4, 0.0, 0.9, 4.2}) {
    CHECK(sp.inverse(sp(x)) == doctest::Approx(x).epsilon(1e-9));
    CHECK(off.inverse(off(x)) == doctest::Approx(x).epsilon(1e-9));
  }

  // Lipschitz bound on sampled pairs.
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pick(-8.0, 8.0);
  for (int i = 0; i < 200; ++i) {
    const double a = pick(gen), b = pick(gen);
    CHECK(std::fabs(sp(a) - sp(b)) <= sp.lipschitz() * std::fabs(a - b) + 1e-12);
    CHECK(std::fabs(off(a) - off(b)) <= off.lipschitz() * std::fabs(a - b) + 1e-12);
  }
}

TEST_CASE("custom jump rate interpolates its table and extends linearly") {
  const JumpRate table =
      JumpRate::custom({-1.0, 0.0, 1.0, 2.0}, {0.1, 0.5, 1.0, 1.2}, 1.0, 0.1);
  CHECK_FALSE(table.differentiable());
  CHECK(table(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(table(0.5) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(table(1.5) == doctest::Approx(1.1).epsilon(1e-14));
  // Edge slopes continue outside the table; the floor caps the left tail.
  CHECK(table(3.0) == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(table(-2.0) == doctest::Approx(0.1).epsilon(1e-12));
  const JumpRate unfloored =
      JumpRate::custom({-1.0, 0.0, 1.0, 2.0}, {0.1, 0.5, 1.0, 1.2}, 1.0, -10.0);
  CHECK(unfloored(-2.0) == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("network weights are row-normalized with zero rows for isolated nodes") {
  Eigen::MatrixXi adj(3, 3);
  adj << 0, 1, 1, 1, 0, 0, 0, 0, 0;
  const NetworkSpec net(adj, {"a", "b", "c"});
  CHECK(net.size() == 3);
  CHECK(net.degree(0) == 2);
  CHECK(net.degree(1) == 1);
  CHECK(net.degree(2) == 0);
  CHECK(net.weights()(0, 1) == 0.5);
  CHECK(net.weights()(0, 2) == 0.5);
  CHECK(net.weights()(1, 0) == 1.0);
  CHECK(net.weights().row(2).cwiseAbs().sum() == 0.0);
  CHECK(net.node_names()[2] == "c");

  Eigen::MatrixXi loop = Eigen::MatrixXi::Zero(2, 2);
  loop(0, 0) = 1;
  CHECK_THROWS_AS(NetworkSpec(loop), config_error);
  Eigen::MatrixXi rect = Eigen::MatrixXi::Zero(2, 3);
  CHECK_THROWS_AS(NetworkSpec(rect), config_error);
  Eigen::MatrixXi ok = Eigen::MatrixXi::Zero(2, 2);
  CHECK_THROWS_AS(NetworkSpec(ok, {"only"}), config_error);
}

TEST_CASE("network kernel evaluates alpha I + beta W per season") {
  // Burst self term every fourth step, cosine-modulated neighbor term.
  NetworkKernel kernel;
  kernel.p = 4;
  kernel.network = testutil::mutual_pair();
  kernel.alpha.assign(4, std::vector<double>(10, 0.0));
  kernel.beta = kernel.alpha;
  for (int v = 1; v <= 4; ++v) {
    const double burst = (v == 4 ? 8.0 : 0.2) * 0.3;
    const double wave = 1.0 + std::cos(v * std::numbers::pi / 2.0);
    for (int k = 1; k <= 10; ++k) {
      kernel.alpha[v - 1][k - 1] = burst / (k * k);
      kernel.beta[v - 1][k - 1] = 0.2 * std::exp(-3.0 * k) * wave;
    }
  }
  const PeriodicKernel packed{kernel};

  // Season-4 spike at lag one.
  CHECK(kernel.alpha[3][0] == doctest::Approx(2.4).epsilon(1e-14));
  CHECK(kernel.beta[3][0] == doctest::Approx(0.0199148).epsilon(1e-4));

  const Matrix w = kernel.network.weights();
  for (int v = 1; v <= 4; ++v) {
    for (int k = 1; k <= 10; ++k) {
      const Matrix want =
          kernel.alpha[v - 1][k - 1] * Matrix::Identity(2, 2) + kernel.beta[v - 1][k - 1] * w;
      CHECK((packed.eval(v, k) - want).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  // Beyond the stored horizon everything is zero.
  CHECK(packed.eval(1, 11).cwiseAbs().maxCoeff() == 0.0);
  CHECK(packed.effective_lags() == 10);
}

TEST_CASE("geometric-decay kernel evaluation") {
  // One exponential, odd family: rate 3, so lag k carries e^{-3k/tau}.
  const PeriodicKernel k1 = testutil::scalar_exp_poly(1, 1.0, ExponentFamily::odd, {{1.0}});
  CHECK(k1.eval(1, 2)(0, 0) == doctest::Approx(std::exp(-6.0)).epsilon(1e-14));
  CHECK(k1.eval(1, 1)(0, 0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-14));

  // Mixed family-all pair.
  const PeriodicKernel k2 =
      testutil::scalar_exp_poly(2, 2.0, ExponentFamily::all, {{0.5, 0.25}});
  for (int lag : {1, 3, 7}) {
    const double want = 0.5 * std::exp(-lag / 2.0) + 0.25 * std::exp(-static_cast<double>(lag));
    CHECK(k2.eval(1, lag)(0, 0) == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("strictly periodic kernels repeat with the season count") {
  std::mt19937_64 gen(3);
  for (int round = 0; round < 20; ++round) {
    const ModelSpec spec = testutil::random_geometric_model(gen, 3);
    const PeriodicKernel& kernel = spec.kernel();
    const int p = kernel.seasons();
    for (int v = 1; v <= p; ++v) {
      for (int lag : {1, 2, 9}) {
        const Matrix a = kernel.eval(v, lag);
        const Matrix b = kernel.eval(v + 3LL * p, lag);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("real-period kernel uses Fourier loadings of the literal time") {
  const std::vector<double> self{0.2, 0.05, -0.1};
  const std::vector<double> neighbor{0.1, 0.0, 0.04};
  TrigExpPolyKernel kernel;
  kernel.period = 52.18;
  kernel.harmonics = 1;
  kernel.q = 1;
  kernel.tau = 3.0;
  kernel.family = ExponentFamily::odd;
  kernel.network = testutil::mutual_pair();
  kernel.self = {self};
  kernel.neighbor = {neighbor};
  const PeriodicKernel packed{kernel};
  CHECK_FALSE(packed.strictly_periodic());
  CHECK(packed.period() == doctest::Approx(52.18));
  CHECK_THROWS_AS(packed.seasons(), config_error);

  const double t = 13.0;
  const double arg = 2.0 * std::numbers::pi * t / 52.18;
  const double a = 0.2 + 0.05 * std::sin(arg) - 0.1 * std::cos(arg);
  const double b = 0.1 + 0.04 * std::cos(arg);
  CHECK(trig_loading(self, t, 52.18) == doctest::Approx(a).epsilon(1e-14));
  const Matrix got = packed.eval(13, 2);
  const Matrix want = std::exp(-6.0 / 3.0) *
                      (a * Matrix::Identity(2, 2) + b * kernel.network.weights());
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("absolute lag sums: closed geometric form matches deep truncation") {
  // Single positive exponential: r/(1-r) exactly.
  const PeriodicKernel k1 = testutil::scalar_exp_poly(1, 1.0, ExponentFamily::odd, {{1.0}});
  const double r = std::exp(-3.0);
  CHECK(kernel_l1_norms(k1)[0](0, 0) == doctest::Approx(r / (1.0 - r)).epsilon(1e-14));

  // Sign-mixed entry falls back to a truncated sum; compare against our own.
  const PeriodicKernel k2 =
      testutil::scalar_exp_poly(2, 4.0, ExponentFamily::odd, {{1.0, -0.5}});
  long double acc = 0.0L;
  for (int k = 1; k <= k2.effective_lags(); ++k) {
    acc += std::fabs(1.0 * std::exp(-3.0 * k / 4.0) - 0.5 * std::exp(-5.0 * k / 4.0));
  }
  CHECK(kernel_l1_norms(k2)[0](0, 0) ==
        doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));

  // Truncation at the effective horizon loses at most the geometric tail.
  const PeriodicKernel dense = testutil::dense_twin(k2);
  CHECK(kernel_l1_norms(dense)[0](0, 0) ==
        doctest::Approx(kernel_l1_norms(k2)[0](0, 0)).epsilon(1e-10));

  // Dense kernels sum the stored lags directly.
  const PeriodicKernel k3 = testutil::scalar_kernel({{0.5, -0.25, 0.125}});
  CHECK(kernel_l1_norms(k3)[0](0, 0) == doctest::Approx(0.875).epsilon(1e-14));

  // Network kernels: |alpha| on the diagonal, |beta| spread over W.
  NetworkKernel nk;
  nk.p = 1;
  nk.network = testutil::mutual_pair();
  nk.alpha = {{0.3, -0.1}};
  nk.beta = {{0.2, 0.1}};
  const std::vector<Matrix> sums = kernel_l1_norms(PeriodicKernel{nk});
  CHECK(sums[0](0, 0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(sums[0](0, 1) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("model validation reports cross-field problems") {
  const ModelSpec good = testutil::scalar_exp_poly_model(
      1, 2.0, ExponentFamily::odd, {{0.4}}, {1.0});
  CHECK(validate_model(good).empty());

  // Negative coefficient under the identity rate can drive lambda negative.
  const ModelSpec bad = testutil::scalar_exp_poly_model(
      1, 2.0, ExponentFamily::odd, {{-0.4}}, {1.0});
  const std::vector<std::string> problems = validate_model(bad);
  REQUIRE_FALSE(problems.empty());
  bool mentions_identity = false;
  for (const std::string& msg : problems) {
    if (msg.find("identity") != std::string::npos) mentions_identity = true;
  }
  CHECK(mentions_identity);

  // Baseline shape must match the kernel.
  CHECK_THROWS_AS(ModelSpec(testutil::scalar_kernel({{0.2}, {0.1}}), Matrix::Ones(3, 1),
                            JumpRate::identity(), SeasonIndexing::by_target),
                  config_error);
  CHECK_THROWS_AS(ModelSpec(testutil::scalar_kernel({{0.2}}), Matrix::Ones(1, 2),
                            JumpRate::identity(), SeasonIndexing::by_target),
                  config_error);
}

TEST_CASE("count series bookkeeping") {
  CountSeries series;
  series.counts = CountMatrix::Zero(4, 2);
  series.t0 = 5;
  CHECK(series.steps() == 4);
  CHECK(series.dimension() == 2);
  CHECK(series.time_of(0) == 5);
  CHECK(series.time_of(3) == 8);
  CHECK_NOTHROW(validate_series(series));
  series.counts(1, 1) = -2;
  CHECK_THROWS_AS(validate_series(series), config_error);
}

TEST_CASE("model JSON round trips preserve behaviour") {
  std::mt19937_64 gen(17);
  for (int round = 0; round < 12; ++round) {
    const ModelSpec spec = testutil::random_geometric_model(gen, 4);
    const ModelSpec back = model_from_json(model_to_json(spec));
    CHECK(back.dimension() == spec.dimension());
    CHECK(back.indexing() == spec.indexing());
    CHECK(back.jump_rate().kind() == spec.jump_rate().kind());
    CHECK(back.jump_rate().floor() == spec.jump_rate().floor());
    for (int v = 1; v <= spec.kernel().seasons(); ++v) {
      CHECK((back.baseline_at(v) - spec.baseline_at(v)).cwiseAbs().maxCoeff() == 0.0);
      for (int lag : {1, 2, 5}) {
        CHECK((back.kernel().eval(v, lag) - spec.kernel().eval(v, lag))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("trig model JSON round trip") {
  TrigExpPolyKernel kernel;
  kernel.period = 52.18;
  kernel.harmonics = 1;
  kernel.q = 2;
  kernel.tau = 3.0;
  kernel.network = testutil::mutual_pair();
  kernel.self = {{0.2, 0.05, -0.1}, {0.1, 0.0, 0.02}};
  kernel.neighbor = {{0.1, 0.0, 0.04}, {0.05, -0.01, 0.0}};
  TrigBaseline base;
  base.harmonics = 1;
  base.coeffs = Matrix::Zero(3, 2);
  base.coeffs << 1.0, 1.2, 0.1, -0.2, 0.3, 0.0;
  const ModelSpec spec(PeriodicKernel{kernel}, base, JumpRate::identity(),
                       SeasonIndexing::by_target);
  const ModelSpec back = model_from_json(model_to_json(spec));
  REQUIRE(back.trig_baseline());
  CHECK((back.trig_baseline_spec().coeffs - base.coeffs).cwiseAbs().maxCoeff() == 0.0);
  for (std::int64_t t : {1, 26, 400}) {
    CHECK((back.baseline_at(t) - spec.baseline_at(t)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.kernel().eval(t, 3) - spec.kernel().eval(t, 3)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("table-based jump rates refuse to serialize") {
  const ModelSpec spec = testutil::scalar_model(
      {{0.3}}, {1.0}, JumpRate::custom({0.0, 1.0}, {0.0, 1.0}, 1.0, 0.0));
  CHECK_THROWS_AS(model_to_json(spec), config_error);
}

TEST_CASE("matrix and network JSON round trips") {
  Matrix m(2, 3);
  m << 1.5, -2.0, 0.0, 3.25, 1e-9, 7.0;
  CHECK((matrix_from_json(matrix_to_json(m), "m") - m).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXi adj(3, 3);
  adj << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const NetworkSpec net(adj, {"x", "y", "z"});
  const NetworkSpec back = network_from_json(network_to_json(net));
  CHECK(back.adjacency() == net.adjacency());
  CHECK(back.node_names() == net.node_names());
}
