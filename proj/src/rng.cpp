#include "perinet/rng.hpp"

#include <cmath>
#include <limits>

namespace perinet {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// Finalizer from splitmix64; bijective, strong avalanche.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t absorb(std::uint64_t state, std::uint64_t word) {
  return mix64((state + kGolden) ^ word);
}

}  // namespace

SubstreamRng::SubstreamRng(std::uint64_t seed, StreamPurpose purpose,
                           std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t s = mix64(seed + kGolden);
  s = absorb(s, static_cast<std::uint64_t>(purpose));
  s = absorb(s, a);
  s = absorb(s, b);
  s = absorb(s, c);
  state_ = s;
}

std::uint64_t SubstreamRng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double SubstreamRng::next_u01() {
  // 53-bit mantissa offset by half an ulp keeps the value in (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SubstreamRng::next_exp() { return -std::log(next_u01()); }

namespace {

// Sequential search by inversion; cumulative probability reaches u after
// O(mean) steps. Valid for small means only.
std::int64_t poisson_inversion(double mean, SubstreamRng& rng) {
  const double u = rng.next_u01();
  double p = std::exp(-mean);
  double cdf = p;
  std::int64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (k > 1000) break;  // p underflowed; u was in the far tail
  }
  return k;
}

// Transformed rejection with squeeze (Hormann's PTRS), valid for mean >= 10.
std::int64_t poisson_ptrs(double mean, SubstreamRng& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next_u01() - 0.5;
    const double v = rng.next_u01();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        k * loglam - mean - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(kf);
    }
  }
}

}  // namespace

std::int64_t poisson_draw(double mean, SubstreamRng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw numeric_error("poisson_draw: mean must be finite and nonnegative, got " +
                        std::to_string(mean));
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) return poisson_inversion(mean, rng);
  return poisson_ptrs(mean, rng);
}

std::vector<std::int64_t> poisson_process_counts(const std::vector<double>& levels,
                                                 SubstreamRng& rng) {
  double top = 0.0;
  for (double level : levels) {
    if (!(level >= 0.0) || !std::isfinite(level)) {
      throw numeric_error("poisson_process_counts: levels must be finite and nonnegative");
    }
    top = std::max(top, level);
  }
  if (top > 1e6) {
    throw numeric_error("poisson_process_counts: level " + std::to_string(top) +
                        " too large for point-by-point generation");
  }
  // Arrival times of a unit-rate process, generated once; each requested
  // level only depends on points below it.
  std::vector<double> arrivals;
  double s = rng.next_exp();
  while (s <= top) {
    arrivals.push_back(s);
    s += rng.next_exp();
  }
  std::vector<std::int64_t> counts(levels.size(), 0);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    std::int64_t n = 0;
    for (double arrival : arrivals) {
      if (arrival <= levels[i]) ++n;
    }
    counts[i] = n;
  }
  return counts;
}

}  // namespace perinet
