#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perinet/inference.hpp"
#include "perinet/simulate.hpp"
#include "perinet/stats.hpp"

namespace perinet {

struct ForecastOptions {
  // Monte Carlo trajectories used when the jump rate is not the identity
  // and the horizon exceeds one step.
  int paths = 2000;
  std::uint64_t seed = 0;
  // Substream coordinate separating unrelated forecast calls (the rolling
  // loop passes the anchor index).
  std::uint64_t replicate = 0;
};

// Conditional-mean predictions for times t+1..t+h given counts through t.
// One step ahead this is the intensity itself for every rate. Further steps
// use the exact recursion under the identity rate, feeding predicted means
// back as pseudo-counts; any other rate averages the intensity path over
// simulated trajectories. Geometric-decay kernels advance the recursive
// state, so the cost is O(q h d^2) plus the history scan.
Matrix forecast(const ModelSpec& spec, const CountSeries& history, int horizon,
                const ForecastOptions& opts = {});

struct RollingOptions {
  int horizon = 1;
  ForecastOptions mc;
  // Refit at every anchor on the data seen so far, warm-started from the
  // previous anchor's estimate. Without it the given spec is used throughout.
  std::optional<ParamLayout> refit;
  FitOptions refit_options;
};

struct ModelForecast {
  std::string name;
  Matrix predictions;
  // Per-node root mean squared error against the observed tail.
  Vector rmse;
  // Fit-window statistics carried along for comparison tables.
  double loglik = 0.0;
  double bic = 0.0;
  bool has_fit_stats = false;
};

// Accuracy tests for one model pair: raw per-node statistics plus the
// false-discovery-rate adjustment across nodes. Nodes whose loss
// differential is degenerate report statistic 0 and p-value 1.
struct PairAccuracy {
  int first = 0;
  int second = 0;
  std::vector<DmResult> node_tests;
  std::vector<double> adjusted_p;
};

struct ForecastReport {
  int horizon = 1;
  // Last time index conditioned on at the first anchor.
  std::int64_t origin = 0;
  // Observed tail rows, aligned with every prediction matrix.
  Matrix actuals;
  std::vector<std::string> node_names;
  std::vector<ModelForecast> models;
  std::vector<PairAccuracy> tests;
};

// Predictions for every time after the first `split` rows, re-anchored
// every `horizon` steps: times within a block are predicted from the actual
// counts up to the block's anchor, matching an h-step-ahead forecaster that
// is refreshed once per block.
ForecastReport rolling_forecast(const ModelSpec& spec, const CountSeries& data,
                                std::int64_t split, const RollingOptions& opts);

// Merges reports over the same tail (same horizon, origin, and actuals) and
// fills the pairwise accuracy tests.
ForecastReport compare_reports(const std::vector<ForecastReport>& reports);

Json forecast_report_to_json(const ForecastReport& report);
ForecastReport forecast_report_from_json(const Json& j);

}  // namespace perinet
