#pragma once

#include <cstdint>
#include <vector>

#include "perinet/model.hpp"
#include "perinet/rng.hpp"

namespace perinet {

// Draws are keyed by (seed, replicate, time, node), so a trajectory does not
// depend on thread count, on other replicates, or on how much of it is
// generated. history rows are fixed counts for the times immediately before
// the simulated stretch: with B burn-in periods the history occupies times
// -B*p-H+1 .. -B*p, burn-in is drawn on -B*p+1 .. 0 and the returned series
// covers 1 .. steps.
struct SimulationConfig {
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  int burn_in_periods = 0;
  CountMatrix history;
  bool record_intensities = true;
};

// Full lag-sum simulation; works for every kernel variant. O(T^2 d^2) with
// the lag reach capped at the kernel's effective horizon.
CountSeries simulate_direct(const ModelSpec& spec, const SimulationConfig& cfg);

// Recursive state of a geometric-decay kernel: one d-vector per exponential.
// With target-season indexing the state is the data-driven geometric sum of
// past counts; with source-season indexing it is already coefficient-weighted.
// Either way the intensity at next_time is a linear read-out of xi.
struct MarkovState {
  std::int64_t next_time = 1;
  std::vector<Vector> xi;
};

struct MarkovSimResult {
  CountSeries series;
  MarkovState state;
};

// Builds the state holding sum_{s <= t} decay^(t+1-s) gains for the given
// count rows ending at time `last_time`.
MarkovState markov_state_from_history(const ModelSpec& spec, const CountMatrix& counts,
                                      std::int64_t last_time);
// Intensity at state.next_time given the state.
Vector markov_intensity(const ModelSpec& spec, const MarkovState& state);
// Absorbs the counts of state.next_time and advances one step.
void markov_advance(const ModelSpec& spec, MarkovState& state,
                    const Eigen::Ref<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>& counts);

// O(q T d^2) simulation through the recursive state; only geometric-decay
// kernels. Counts agree with simulate_direct draw for draw.
MarkovSimResult simulate_markov(const ModelSpec& spec, const SimulationConfig& cfg);

// Several models driven by one shared unit-rate point process per
// (time, node): arms with equal intensities get equal counts, and the count
// difference of two arms is conditionally Poisson with mean |lambda gap|.
// Arms must share dimension, jump rate, and period; burn_in_periods is per
// arm (empty = all cold starts) and burn-in draws are coupled as well.
struct CoupledConfig {
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::vector<int> burn_in_periods;
  CountMatrix history;
  bool record_intensities = true;
};

std::vector<CountSeries> simulate_coupled(const std::vector<ModelSpec>& arms,
                                          const CoupledConfig& cfg);

// Directed stochastic block model without self-loops: edge i -> j appears
// with probability block_probs(block(i), block(j)).
NetworkSpec generate_sbm(const std::vector<int>& block_sizes, const Matrix& block_probs,
                         std::uint64_t seed);

struct MomentSummary {
  int order = 1;
  int replications = 0;
  // Per (step, node): mean of Y^order across replications and its standard
  // error.
  Matrix mean;
  Matrix std_error;
};

MomentSummary empirical_moments(const std::vector<CountSeries>& replications, int order);

}  // namespace perinet
