#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perinet/forecast.hpp"
#include "perinet/kernel_approx.hpp"
#include "perinet/stability.hpp"

namespace perinet {

// A run is either a named preset or an explicit stage list. Presets:
//   coupling-decay      two coupled arms of the same model, one started
//                       near stationarity and one cold; writes the decay of
//                       the mean trajectory gap and its slope fit.
//   estimator-recovery  repeated simulate-and-refit of a seasonal network
//                       model; writes the per-season baseline estimates.
// Explicit stages are JSON objects with a "stage" key among simulate,
// stability, approx, fit, forecast; inputs are paths, outputs land in
// out_dir.
struct ExperimentConfig {
  std::string id = "experiment";
  std::string preset;
  std::uint64_t seed = 0;
  int threads = 1;
  // 0 picks the preset default (2500 coupled replicates, 10 refits).
  int replicates = 0;
  // 0 picks the preset default (30 gap steps, 1400 estimation steps).
  std::int64_t steps = 0;
  std::string out_dir = ".";
  std::vector<Json> stages;
};

ExperimentConfig experiment_config_from_json(const Json& j);

struct ExperimentResult {
  bool ok = true;
  std::string error;
  // Failure family when !ok: 2 validation, 3 numeric, 4 io.
  int error_status = 0;
  // File names relative to out_dir, manifest.json last.
  std::vector<std::string> outputs;
  Json manifest;
};

// Runs the preset or the declared stages, writing every artifact plus
// manifest.json into out_dir. Given one seed the data files are reproduced
// byte for byte on re-runs, independent of the thread count. A stage
// failure stops the run; the artifacts already written stay in place and
// the manifest records the error instead of throwing.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

Json verdict_to_json(const StabilityVerdict& verdict);
Json approx_report_to_json(const ApproximationReport& report);

}  // namespace perinet
