#pragma once

#include <cstdint>
#include <vector>

#include "perinet/common.hpp"

namespace perinet {

// Purpose tags keep draw streams for unrelated sampling tasks disjoint.
enum class StreamPurpose : std::uint64_t {
  counts = 0,
  network = 1,
  forecast_paths = 2,
};

// Counter-derived random substream. Every (seed, purpose, a, b, c) key yields
// an independent stream, so draws do not depend on scheduling or on how many
// other streams were consumed. a/b/c are caller-chosen coordinates, e.g.
// (replicate, time, node) for count draws; negative times are cast through
// two's complement and remain distinct.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a,
               std::uint64_t b, std::uint64_t c);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double next_u01();
  // Standard exponential via inversion.
  double next_exp();

 private:
  std::uint64_t state_;
};

// Exact Poisson draw. Inversion below mean 10, transformed rejection above.
// mean must be finite and nonnegative.
std::int64_t poisson_draw(double mean, SubstreamRng& rng);

// Counts of one unit-rate Poisson process at several levels: result[i] is the
// number of process points in [0, levels[i]]. Coupled simulation arms share
// the process, so arms with equal levels get equal counts and the count gap
// between two arms is Poisson with mean |levels difference|.
std::vector<std::int64_t> poisson_process_counts(const std::vector<double>& levels,
                                                 SubstreamRng& rng);

}  // namespace perinet
