#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perinet/common.hpp"
#include "perinet/jump_rate.hpp"
#include "perinet/kernel.hpp"

namespace perinet {

// Baseline pre-intensity with a real period: row 0 is the constant term,
// rows (2j-1, 2j) are the sin/cos loadings of harmonic j, one column per node.
struct TrigBaseline {
  int harmonics = 1;
  Matrix coeffs;
};

// Complete generative specification of a periodic count autoregression:
// Y_t ~ Poisson(lambda_t) conditionally on the past, where
// lambda_t = rate(mu_t + sum_{k<t} kernel(t or k, t-k) Y_k).
class ModelSpec {
 public:
  // Strictly periodic baseline: row v-1 of `seasonal` is mu_v. shared_nodes
  // records that the baseline was given as one scalar per season; it only
  // affects serialization, the stored matrix is always dense.
  ModelSpec(PeriodicKernel kernel, Matrix seasonal, JumpRate rate,
            SeasonIndexing indexing, bool shared_nodes = false);
  // Real-period baseline for real-period kernels.
  ModelSpec(PeriodicKernel kernel, TrigBaseline trig, JumpRate rate,
            SeasonIndexing indexing);

  const PeriodicKernel& kernel() const { return kernel_; }
  const JumpRate& jump_rate() const { return rate_; }
  SeasonIndexing indexing() const { return indexing_; }
  int dimension() const { return kernel_.dimension(); }

  bool trig_baseline() const { return trig_.has_value(); }
  const Matrix& seasonal_baseline() const;
  const TrigBaseline& trig_baseline_spec() const;
  bool shared_baseline_nodes() const { return shared_nodes_; }

  // Baseline vector mu_t.
  Vector baseline_at(std::int64_t t) const;
  // Time index whose kernel applies when weighting the count at source time
  // k in the intensity at target time t.
  std::int64_t kernel_time(std::int64_t target, std::int64_t source) const {
    return indexing_ == SeasonIndexing::by_target ? target : source;
  }

 private:
  PeriodicKernel kernel_;
  JumpRate rate_;
  SeasonIndexing indexing_;
  Matrix seasonal_;
  std::optional<TrigBaseline> trig_;
  bool shared_nodes_ = false;
};

// Observed or simulated counts, one row per time step. intensities is either
// empty or aligned with counts.
struct CountSeries {
  CountMatrix counts;
  Matrix intensities;
  std::int64_t t0 = 1;
  std::vector<std::string> node_names;

  std::int64_t steps() const { return counts.rows(); }
  int dimension() const { return static_cast<int>(counts.cols()); }
  // Time of row r.
  std::int64_t time_of(std::int64_t r) const { return t0 + r; }
};

// Cross-field consistency report; empty means the spec is usable. Individual
// component constructors already reject malformed pieces, this checks what
// they cannot see in isolation.
std::vector<std::string> validate_model(const ModelSpec& spec);

// Throws config_error when counts are negative or the shape is degenerate.
void validate_series(const CountSeries& series);

}  // namespace perinet
