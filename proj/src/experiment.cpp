#include "perinet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "perinet/csv.hpp"
#include "perinet/inference.hpp"
#include "perinet/simulate.hpp"
#include "perinet/stats.hpp"

namespace perinet {

namespace {

namespace fs = std::filesystem;

std::string joined(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Runs replicate bodies over a thread pool; the body writes only to its own
// replicate's slots, so results do not depend on scheduling.
void for_each_replicate(int replicates, int threads,
                        const std::function<void(int)>& body) {
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(replicates));
  auto worker = [&] {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= replicates) return;
      try {
        body(rep);
      } catch (...) {
        failures[static_cast<std::size_t>(rep)] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, replicates);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

NetworkSpec two_block_network(std::uint64_t seed) {
  Matrix probs(2, 2);
  probs << 0.8, 0.1, 0.1, 0.7;
  return generate_sbm({4, 8}, probs, seed);
}

// Twelve-node 4-periodic network model with a burst season: the self kernel
// spikes every fourth step and the neighbor kernel follows a cosine wave.
// Linear rate, source-season indexing.
ModelSpec coupling_model(std::uint64_t seed) {
  NetworkKernel kernel;
  kernel.p = 4;
  kernel.network = two_block_network(seed);
  kernel.alpha.assign(4, std::vector<double>(10, 0.0));
  kernel.beta = kernel.alpha;
  for (int v = 1; v <= 4; ++v) {
    const double burst = v == 4 ? 0.3 * 8.0 : 0.3 * 0.2;
    const double wave = 1.0 + std::cos(static_cast<double>(v) * std::numbers::pi / 2.0);
    for (int k = 1; k <= 10; ++k) {
      kernel.alpha[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(k - 1)] =
          burst / static_cast<double>(k * k);
      kernel.beta[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(k - 1)] =
          0.2 * std::exp(-3.0 * k) * wave;
    }
  }
  Matrix base = Matrix::Constant(4, 12, 0.4);
  return ModelSpec(PeriodicKernel(std::move(kernel)), std::move(base), JumpRate::identity(),
                   SeasonIndexing::by_source, /*shared_nodes=*/true);
}

void run_coupling(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                  Json& details) {
  const int reps = cfg.replicates > 0 ? cfg.replicates : 2500;
  const int steps = cfg.steps > 0 ? static_cast<int>(cfg.steps) : 30;
  const ModelSpec spec = coupling_model(cfg.seed);
  const std::vector<ModelSpec> arms{spec, spec};
  const int d = spec.dimension();

  // Integer gap totals keep the reduction exact, so the thread count cannot
  // change the output bytes.
  std::vector<std::vector<std::int64_t>> per_rep(
      static_cast<std::size_t>(reps), std::vector<std::int64_t>(static_cast<std::size_t>(steps)));
  for_each_replicate(reps, cfg.threads, [&](int rep) {
    CoupledConfig cc;
    cc.steps = steps;
    cc.seed = cfg.seed;
    cc.replicate = static_cast<std::uint64_t>(rep);
    cc.burn_in_periods = {25, 0};
    cc.record_intensities = false;
    const std::vector<CountSeries> pair = simulate_coupled(arms, cc);
    for (int t = 0; t < steps; ++t) {
      per_rep[static_cast<std::size_t>(rep)][static_cast<std::size_t>(t)] =
          (pair[0].counts.row(t) - pair[1].counts.row(t)).cwiseAbs().sum();
    }
  });

  Matrix table(steps, 2);
  std::vector<std::string> labels;
  std::vector<double> xs, ys;
  for (int t = 0; t < steps; ++t) {
    std::int64_t total = 0;
    for (int rep = 0; rep < reps; ++rep) {
      total += per_rep[static_cast<std::size_t>(rep)][static_cast<std::size_t>(t)];
    }
    const double mean = static_cast<double>(total) / (static_cast<double>(reps) * d);
    const double log_mean = mean > 0.0 ? std::log(mean) : std::numeric_limits<double>::quiet_NaN();
    table(t, 0) = mean;
    table(t, 1) = log_mean;
    labels.push_back(std::to_string(t + 1));
    if (mean > 0.0 && xs.size() == static_cast<std::size_t>(t)) {
      xs.push_back(static_cast<double>(t + 1));
      ys.push_back(log_mean);
    }
  }
  write_table(joined(cfg.out_dir, "decay.csv"), {"t", "mean_gap", "log_mean_gap"}, labels, table);
  outputs.push_back("decay.csv");

  if (xs.size() >= 2) {
    const LinearFit line = fit_line(xs, ys);
    Json fit;
    fit["slope"] = line.slope;
    fit["intercept"] = line.intercept;
    fit["r2"] = line.r2;
    fit["points"] = xs.size();
    write_json_file(joined(cfg.out_dir, "slope.json"), fit);
    outputs.push_back("slope.json");
    details["slope"] = line.slope;
    details["r2"] = line.r2;
  }
  details["replicates"] = reps;
  details["steps"] = steps;
}

// Seven-season network model whose baseline is active in the first three
// seasons and whose self/neighbor loadings ride season-dependent waves.
ModelSpec recovery_truth(const NetworkSpec& net) {
  ExpPolyKernel kernel;
  kernel.p = 7;
  kernel.q = 4;
  kernel.tau = 4.0;
  kernel.family = ExponentFamily::odd;
  const int d = net.size();
  const double self_base[4] = {1.0, 0.5, -1.5, -2.0};
  const double neighbor_base[4] = {1.5, 1.5, -4.0, -5.0};
  kernel.coef.assign(7, std::vector<Matrix>(4));
  for (int v = 1; v <= 7; ++v) {
    const double fa = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * v / 7.0));
    const double fb = std::sin(2.0 * std::numbers::pi * v / 7.0);
    for (int m = 0; m < 4; ++m) {
      Matrix g = neighbor_base[m] * fb * net.weights();
      g.diagonal().array() += self_base[m] * fa;
      kernel.coef[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(m)] = std::move(g);
    }
  }
  Matrix base = Matrix::Zero(7, d);
  base.topRows(3).setConstant(1.0);
  return ModelSpec(PeriodicKernel(std::move(kernel)), std::move(base),
                   JumpRate::softplus_offset(0.01), SeasonIndexing::by_target,
                   /*shared_nodes=*/true);
}

void run_recovery(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                  Json& details) {
  const int reps = cfg.replicates > 0 ? cfg.replicates : 10;
  const std::int64_t steps = cfg.steps > 0 ? cfg.steps : 1400;
  const NetworkSpec net = two_block_network(cfg.seed);
  const ModelSpec truth = recovery_truth(net);
  const ParamLayout layout =
      ParamLayout::network_poly(7, net, 4, 4.0, ExponentFamily::odd, SeasonIndexing::by_target,
                                JumpRate::softplus_offset(0.01));

  write_json_file(joined(cfg.out_dir, "model.json"), model_to_json(truth));
  outputs.push_back("model.json");

  const int block = layout.season_block();
  Matrix mu_hat(reps, 7);
  std::vector<double> logliks(static_cast<std::size_t>(reps));
  std::vector<char> converged(static_cast<std::size_t>(reps), 0);
  for_each_replicate(reps, cfg.threads, [&](int rep) {
    SimulationConfig sc;
    sc.steps = steps;
    sc.seed = cfg.seed;
    sc.replicate = static_cast<std::uint64_t>(rep);
    sc.burn_in_periods = 20;
    sc.record_intensities = false;
    const CountSeries series = simulate_markov(truth, sc).series;
    const FitResult fit = fit_mle(series, layout, {});
    for (int v = 0; v < 7; ++v) {
      mu_hat(rep, v) = fit.gamma[static_cast<std::int64_t>(v) * block];
    }
    logliks[static_cast<std::size_t>(rep)] = fit.loglik;
    converged[static_cast<std::size_t>(rep)] = fit.converged ? 1 : 0;
  });

  std::vector<std::string> header{"replicate"};
  for (int v = 1; v <= 7; ++v) header.push_back("season_" + std::to_string(v));
  std::vector<std::string> labels;
  for (int rep = 1; rep <= reps; ++rep) labels.push_back(std::to_string(rep));
  write_table(joined(cfg.out_dir, "mu_hat.csv"), header, labels, mu_hat);
  outputs.push_back("mu_hat.csv");

  details["replicates"] = reps;
  details["steps"] = steps;
  details["loglik"] = logliks;
  details["converged"] = Json::array();
  for (const char flag : converged) details["converged"].push_back(flag != 0);
}

ModelSpec with_kernel(const ModelSpec& spec, PeriodicKernel kernel) {
  if (spec.trig_baseline()) {
    return ModelSpec(std::move(kernel), spec.trig_baseline_spec(), spec.jump_rate(),
                     spec.indexing());
  }
  return ModelSpec(std::move(kernel), spec.seasonal_baseline(), spec.jump_rate(),
                   spec.indexing(), spec.shared_baseline_nodes());
}

void run_stages(const ExperimentConfig& cfg, std::vector<std::string>& outputs, Json& timings) {
  int index = 0;
  for (const Json& stage : cfg.stages) {
    ++index;
    const std::string kind = stage.at("stage").get<std::string>();
    const auto started = std::chrono::steady_clock::now();

    if (kind == "simulate") {
      const ModelSpec spec =
          model_from_json(load_json_file(stage.at("model").get<std::string>()));
      SimulationConfig sc;
      sc.steps = stage.at("steps").get<std::int64_t>();
      sc.seed = stage.value("seed", cfg.seed);
      sc.replicate = stage.value("replicate", std::uint64_t{0});
      sc.burn_in_periods = stage.value("burn_in", 0);
      sc.record_intensities = stage.contains("intensities_out");
      const bool markov = stage.value("markov", false);
      CountSeries series = markov ? simulate_markov(spec, sc).series : simulate_direct(spec, sc);
      const std::string out = stage.at("out").get<std::string>();
      write_counts(joined(cfg.out_dir, out), series);
      outputs.push_back(out);
      if (sc.record_intensities) {
        const std::string iout = stage["intensities_out"].get<std::string>();
        write_intensities(joined(cfg.out_dir, iout), series);
        outputs.push_back(iout);
      }
    } else if (kind == "stability") {
      const ModelSpec spec =
          model_from_json(load_json_file(stage.at("model").get<std::string>()));
      const std::string mode = stage.value("mode", std::string("global"));
      StabilityVerdict verdict;
      if (mode == "periodic") {
        verdict = check_periodic(spec);
      } else if (mode == "global") {
        verdict = check_global(spec);
      } else {
        throw config_error("experiment: stability mode must be global or periodic");
      }
      const std::string out = stage.at("out").get<std::string>();
      write_json_file(joined(cfg.out_dir, out), verdict_to_json(verdict));
      outputs.push_back(out);
    } else if (kind == "approx") {
      const ModelSpec spec =
          model_from_json(load_json_file(stage.at("model").get<std::string>()));
      ApproxOptions opts;
      opts.q = stage.value("q", 1);
      opts.tau = stage.contains("tau")
                     ? stage["tau"].get<double>()
                     : select_tau(static_cast<double>(spec.kernel().effective_lags()));
      opts.refine = stage.value("refine", true);
      opts.guard = stage.value("guard", true);
      opts.lipschitz = spec.jump_rate().lipschitz();
      auto [approx, report] = approximate_kernel(spec.kernel(), opts);
      const std::string out = stage.at("out").get<std::string>();
      write_json_file(joined(cfg.out_dir, out), model_to_json(with_kernel(spec, approx)));
      outputs.push_back(out);
      if (stage.contains("report_out")) {
        const std::string rout = stage["report_out"].get<std::string>();
        write_json_file(joined(cfg.out_dir, rout), approx_report_to_json(report));
        outputs.push_back(rout);
      }
    } else if (kind == "fit") {
      const CountSeries data = load_counts(stage.at("data").get<std::string>());
      const ParamLayout layout =
          stage.contains("layout_path")
              ? layout_from_json(load_json_file(stage["layout_path"].get<std::string>()))
              : layout_from_json(stage.at("layout"));
      FitOptions options;
      options.threads = cfg.threads;
      const FitResult fit = fit_mle(data, layout, options);
      const std::string out = stage.at("out").get<std::string>();
      write_json_file(joined(cfg.out_dir, out), fit_to_json(fit));
      outputs.push_back(out);
    } else if (kind == "forecast") {
      const CountSeries data = load_counts(stage.at("data").get<std::string>());
      RollingOptions rolling;
      rolling.horizon = stage.value("horizon", 1);
      rolling.mc.seed = stage.value("seed", cfg.seed);
      ModelForecast stats;
      ModelSpec spec = [&]() -> ModelSpec {
        if (stage.contains("fit")) {
          const Json fit = load_json_file(stage["fit"].get<std::string>());
          if (stage.value("refit", false)) {
            rolling.refit = layout_from_json(fit.at("layout"));
            rolling.refit_options.threads = cfg.threads;
          }
          if (fit.contains("loglik") && fit.contains("parameter_count") &&
              fit.contains("observation_count")) {
            stats.loglik = fit["loglik"].get<double>();
            stats.bic = bic(stats.loglik, fit["parameter_count"].get<int>(),
                            fit["observation_count"].get<std::int64_t>());
            stats.has_fit_stats = true;
          }
          return model_from_json(fit.at("model"));
        }
        return model_from_json(load_json_file(stage.at("model").get<std::string>()));
      }();
      ForecastReport report =
          rolling_forecast(spec, data, stage.at("split").get<std::int64_t>(), rolling);
      report.models[0].name = stage.value("name", std::string("model"));
      report.models[0].loglik = stats.loglik;
      report.models[0].bic = stats.bic;
      report.models[0].has_fit_stats = stats.has_fit_stats;
      const std::string out = stage.at("out").get<std::string>();
      write_json_file(joined(cfg.out_dir, out), forecast_report_to_json(report));
      outputs.push_back(out);
    } else {
      throw config_error("experiment: unknown stage '" + kind + "'");
    }

    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    timings[kind + "_" + std::to_string(index)] = elapsed.count();
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  cfg.id = j.value("id", std::string("experiment"));
  cfg.preset = j.value("preset", std::string());
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.threads = j.value("threads", 1);
  cfg.replicates = j.value("replicates", 0);
  cfg.steps = j.value("steps", std::int64_t{0});
  cfg.out_dir = j.value("out_dir", std::string("."));
  if (j.contains("stages")) {
    for (const Json& stage : j["stages"]) cfg.stages.push_back(stage);
  }
  return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  Json timings = Json::object();
  Json details = Json::object();

  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    result.ok = false;
    result.error = cfg.out_dir + ": cannot create output directory (" + ec.message() + ")";
    result.error_status = 4;
  }

  if (result.ok) {
    const auto started = std::chrono::steady_clock::now();
    try {
      if (cfg.preset == "coupling-decay") {
        run_coupling(cfg, result.outputs, details);
      } else if (cfg.preset == "estimator-recovery") {
        run_recovery(cfg, result.outputs, details);
      } else if (!cfg.preset.empty()) {
        throw config_error("experiment: unknown preset '" + cfg.preset + "'");
      } else {
        run_stages(cfg, result.outputs, timings);
      }
    } catch (const config_error& error) {
      result.ok = false;
      result.error = error.what();
      result.error_status = 2;
    } catch (const io_error& error) {
      result.ok = false;
      result.error = error.what();
      result.error_status = 4;
    } catch (const std::exception& error) {
      result.ok = false;
      result.error = error.what();
      result.error_status = 3;
    }
    if (!cfg.preset.empty()) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
      timings[cfg.preset] = elapsed.count();
    }
  }

  Json manifest;
  manifest["id"] = cfg.id;
  if (!cfg.preset.empty()) manifest["preset"] = cfg.preset;
  manifest["seed"] = cfg.seed;
  manifest["version"] = kLibraryVersion;
  manifest["threads"] = cfg.threads;
  manifest["outputs"] = result.outputs;
  manifest["timings"] = timings;
  if (!details.empty()) manifest["details"] = details;
  manifest["ok"] = result.ok;
  if (!result.ok) manifest["error"] = result.error;
  result.manifest = manifest;

  try {
    write_json_file(joined(cfg.out_dir, "manifest.json"), manifest);
    result.outputs.push_back("manifest.json");
  } catch (const std::exception& error) {
    result.ok = false;
    if (result.error.empty()) {
      result.error = error.what();
      result.error_status = 4;
    }
  }
  return result;
}

Json verdict_to_json(const StabilityVerdict& verdict) {
  Json j;
  j["mode"] = verdict.mode;
  j["rho"] = verdict.rho;
  j["margin"] = verdict.margin;
  j["stable"] = verdict.stable;
  if (verdict.decay.has_value()) {
    Json d;
    switch (verdict.decay->kind) {
      case DecayClass::exponential:
        d["kind"] = "exponential";
        break;
      case DecayClass::polynomial:
        d["kind"] = "polynomial";
        break;
      case DecayClass::unclassified:
        d["kind"] = "unclassified";
        break;
    }
    d["rate"] = verdict.decay->rate;
    d["capped"] = verdict.decay->capped;
    d["fit_r2"] = verdict.decay->fit_r2;
    j["decay"] = std::move(d);
  }
  return j;
}

Json approx_report_to_json(const ApproximationReport& report) {
  Json j;
  j["max_condition"] = report.max_condition;
  j["ridged"] = report.any_ridged;
  j["rho_target"] = report.rho_target;
  j["rho_approx"] = report.rho_approx;
  j["shrunk"] = report.shrunk;
  j["shrink_factor"] = report.shrink_factor;
  j["max_error"] = matrix_to_json(report.max_error);
  j["total_error"] = matrix_to_json(report.total_error);
  Json seasons = Json::array();
  for (const Matrix& season : report.season_error) seasons.push_back(matrix_to_json(season));
  j["season_error"] = std::move(seasons);
  return j;
}

}  // namespace perinet
