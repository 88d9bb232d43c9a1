#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "perinet/rng.hpp"

using namespace perinet;

TEST_CASE("substreams are deterministic in their key") {
  SubstreamRng a(7, StreamPurpose::counts, 1, 2, 3);
  SubstreamRng b(7, StreamPurpose::counts, 1, 2, 3);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("changing any key coordinate moves the stream") {
  const auto head = [](SubstreamRng rng) {
    std::vector<std::uint64_t> out;
    for (int i = 0; i < 4; ++i) out.push_back(rng.next_u64());
    return out;
  };
  const auto base = head(SubstreamRng(7, StreamPurpose::counts, 1, 2, 3));
  CHECK(head(SubstreamRng(8, StreamPurpose::counts, 1, 2, 3)) != base);
  CHECK(head(SubstreamRng(7, StreamPurpose::network, 1, 2, 3)) != base);
  CHECK(head(SubstreamRng(7, StreamPurpose::counts, 2, 2, 3)) != base);
  CHECK(head(SubstreamRng(7, StreamPurpose::counts, 1, 3, 3)) != base);
  CHECK(head(SubstreamRng(7, StreamPurpose::counts, 1, 2, 4)) != base);
  // Negative times map through two's complement and stay distinct.
  const auto neg = head(SubstreamRng(7, StreamPurpose::counts, 1,
                                     static_cast<std::uint64_t>(std::int64_t{-5}), 3));
  CHECK(neg != base);
}

TEST_CASE("uniform and exponential draws land in range with the right mean") {
  SubstreamRng rng(19, StreamPurpose::counts, 0, 0, 0);
  const int n = 200000;
  double usum = 0.0, esum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_u01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    usum += u;
    const double e = rng.next_exp();
    CHECK(e >= 0.0);
    esum += e;
  }
  // se of the uniform mean is 1/sqrt(12 n); of the exponential mean 1/sqrt(n).
  CHECK(std::fabs(usum / n - 0.5) <= 4.0 / std::sqrt(12.0 * n));
  CHECK(std::fabs(esum / n - 1.0) <= 4.0 / std::sqrt(1.0 * n));
}

static void check_poisson_moments(double mean, std::uint64_t seed) {
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    SubstreamRng rng(seed, StreamPurpose::counts, 0, static_cast<std::uint64_t>(i), 0);
    const double y = static_cast<double>(poisson_draw(mean, rng));
    CHECK(y >= 0.0);
    sum += y;
    sumsq += y * y;
  }
  const double m = sum / n;
  const double var = sumsq / n - m * m;
  const double se_mean = std::sqrt(mean / n);
  // Poisson fourth central moment gives Var(sample var) ~ (2 mean^2 + mean)/n.
  const double se_var = std::sqrt((2.0 * mean * mean + mean) / n);
  CHECK(std::fabs(m - mean) <= 4.5 * se_mean);
  CHECK(std::fabs(var - mean) <= 4.5 * se_var);
}

TEST_CASE("poisson draws match their first two moments") {
  check_poisson_moments(3.0, 101);   // inversion branch
  check_poisson_moments(50.0, 102);  // rejection branch
}

TEST_CASE("poisson edge cases") {
  SubstreamRng rng(5, StreamPurpose::counts, 0, 0, 0);
  for (int i = 0; i < 50; ++i) CHECK(poisson_draw(0.0, rng) == 0);
  SubstreamRng again(5, StreamPurpose::counts, 9, 9, 9);
  SubstreamRng twin(5, StreamPurpose::counts, 9, 9, 9);
  CHECK(poisson_draw(4.2, again) == poisson_draw(4.2, twin));
}

TEST_CASE("shared point process counts are monotone in the level") {
  int equal_checks = 0;
  for (int i = 0; i < 2000; ++i) {
    SubstreamRng rng(33, StreamPurpose::counts, static_cast<std::uint64_t>(i), 0, 0);
    const std::vector<std::int64_t> counts =
        poisson_process_counts({1.0, 2.5, 2.5, 4.0}, rng);
    REQUIRE(counts.size() == 4);
    CHECK(counts[0] <= counts[1]);
    CHECK(counts[1] == counts[2]);
    CHECK(counts[2] <= counts[3]);
    equal_checks += counts[1] == counts[2] ? 1 : 0;
  }
  CHECK(equal_checks == 2000);
}

TEST_CASE("shared point process marginals are Poisson") {
  const int n = 100000;
  double first = 0.0, gap = 0.0;
  for (int i = 0; i < n; ++i) {
    SubstreamRng rng(34, StreamPurpose::counts, static_cast<std::uint64_t>(i), 0, 0);
    const std::vector<std::int64_t> counts = poisson_process_counts({1.0, 2.5}, rng);
    first += static_cast<double>(counts[0]);
    gap += static_cast<double>(counts[1] - counts[0]);
  }
  CHECK(std::fabs(first / n - 1.0) <= 4.5 * std::sqrt(1.0 / n));
  CHECK(std::fabs(gap / n - 1.5) <= 4.5 * std::sqrt(1.5 / n));
}

TEST_CASE("empty level list yields no counts") {
  SubstreamRng rng(1, StreamPurpose::counts, 0, 0, 0);
  CHECK(poisson_process_counts({}, rng).empty());
}
