#include "perinet.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perinet/csv.hpp"
#include "perinet/experiment.hpp"
#include "perinet/forecast.hpp"
#include "perinet/inference.hpp"
#include "perinet/kernel_approx.hpp"
#include "perinet/model.hpp"
#include "perinet/serialize.hpp"
#include "perinet/simulate.hpp"
#include "perinet/stability.hpp"
#include "perinet/stats.hpp"

struct pn_model {
  perinet::ModelSpec spec;
};

struct pn_series {
  perinet::CountSeries series;
};

namespace {

thread_local std::string t_last_error;

int fail(const char* what, int code) {
  t_last_error = what;
  return code;
}

// Runs body, routing each exception family to its status code. json parse
// and type errors count as validation: the input text was malformed.
template <typename F>
int guarded(F&& body) {
  try {
    body();
  } catch (const perinet::config_error& e) {
    return fail(e.what(), PN_ERR_VALIDATION);
  } catch (const perinet::io_error& e) {
    return fail(e.what(), PN_ERR_IO);
  } catch (const perinet::numeric_error& e) {
    return fail(e.what(), PN_ERR_NUMERIC);
  } catch (const nlohmann::json::exception& e) {
    return fail(e.what(), PN_ERR_VALIDATION);
  } catch (const std::bad_alloc& e) {
    return fail(e.what(), PN_ERR_NUMERIC);
  } catch (const std::exception& e) {
    return fail(e.what(), PN_ERR_NUMERIC);
  }
  t_last_error.clear();
  return PN_OK;
}

char* copy_out(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw perinet::config_error(what);
}

perinet::Json parse_options(const char* text) {
  if (text == nullptr || *text == '\0') return perinet::Json::object();
  perinet::Json j = perinet::parse_json(text);
  require(j.is_object(), "options must be a json object");
  return j;
}

perinet::ModelSpec with_kernel(const perinet::ModelSpec& spec, perinet::PeriodicKernel kernel) {
  if (spec.trig_baseline()) {
    return perinet::ModelSpec(std::move(kernel), spec.trig_baseline_spec(), spec.jump_rate(),
                              spec.indexing());
  }
  return perinet::ModelSpec(std::move(kernel), spec.seasonal_baseline(), spec.jump_rate(),
                            spec.indexing(), spec.shared_baseline_nodes());
}

perinet::FitOptions fit_options_from_json(const perinet::Json& j) {
  perinet::FitOptions opts;
  opts.threads = j.value("threads", 1);
  opts.optimizer.max_iterations = j.value("max_iterations", opts.optimizer.max_iterations);
  opts.optimizer.gradient_tol = j.value("gradient_tol", opts.optimizer.gradient_tol);
  if (j.contains("init")) {
    const auto raw = j.at("init").get<std::vector<double>>();
    opts.init = Eigen::Map<const perinet::Vector>(raw.data(), static_cast<Eigen::Index>(raw.size()));
  }
  return opts;
}

std::string dump(const perinet::Json& j) { return j.dump(2); }

}  // namespace

extern "C" {

const char* pn_version(void) { return perinet::kLibraryVersion; }

const char* pn_last_error(void) { return t_last_error.c_str(); }

void pn_string_free(char* text) { std::free(text); }

int pn_model_from_json(const char* json, pn_model** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "model_from_json: null argument");
    perinet::ModelSpec spec = perinet::model_from_json(perinet::parse_json(json, "model"));
    const auto problems = perinet::validate_model(spec);
    if (!problems.empty()) throw perinet::config_error(problems.front());
    *out = new pn_model{std::move(spec)};
  });
}

int pn_model_to_json(const pn_model* model, char** out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "model_to_json: null argument");
    *out = copy_out(dump(perinet::model_to_json(model->spec)));
  });
}

void pn_model_free(pn_model* model) { delete model; }

int pn_counts_load(const char* path, pn_series** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "counts_load: null argument");
    *out = new pn_series{perinet::load_counts(path)};
  });
}

int pn_counts_save(const pn_series* series, const char* path) {
  return guarded([&] {
    require(series != nullptr && path != nullptr, "counts_save: null argument");
    perinet::write_counts(path, series->series);
  });
}

int pn_intensities_save(const pn_series* series, const char* path) {
  return guarded([&] {
    require(series != nullptr && path != nullptr, "intensities_save: null argument");
    require(series->series.intensities.rows() == series->series.counts.rows(),
            "series carries no intensity trace");
    perinet::write_intensities(path, series->series);
  });
}

int pn_series_shape(const pn_series* series, int64_t* steps, int32_t* nodes) {
  return guarded([&] {
    require(series != nullptr, "series_shape: null series");
    if (steps != nullptr) *steps = series->series.steps();
    if (nodes != nullptr) *nodes = series->series.dimension();
  });
}

int pn_series_names(const pn_series* series, char** names_json) {
  return guarded([&] {
    require(series != nullptr && names_json != nullptr, "series_names: null argument");
    perinet::Json names = perinet::Json::array();
    for (int i = 0; i < series->series.dimension(); ++i) {
      if (i < static_cast<int>(series->series.node_names.size())) {
        names.push_back(series->series.node_names[i]);
      } else {
        names.push_back("node_" + std::to_string(i + 1));
      }
    }
    *names_json = copy_out(names.dump());
  });
}

void pn_series_free(pn_series* series) { delete series; }

int pn_simulate(const pn_model* model, const char* config_json, pn_series** out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "simulate: null argument");
    const perinet::Json j = parse_options(config_json);
    perinet::SimulationConfig cfg;
    cfg.steps = j.value("steps", std::int64_t{0});
    require(cfg.steps > 0, "simulate: steps must be positive");
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.replicate = j.value("replicate", std::uint64_t{0});
    cfg.burn_in_periods = j.value("burn_in", 0);
    cfg.record_intensities = j.value("intensities", true);
    perinet::CountSeries series = j.value("markov", false)
                                      ? perinet::simulate_markov(model->spec, cfg).series
                                      : perinet::simulate_direct(model->spec, cfg);
    *out = new pn_series{std::move(series)};
  });
}

int pn_stability(const pn_model* model, const char* options_json, char** verdict_json) {
  return guarded([&] {
    require(model != nullptr && verdict_json != nullptr, "stability: null argument");
    const perinet::Json j = parse_options(options_json);
    perinet::StabilityOptions opts;
    opts.margin = j.value("margin", 0.0);
    opts.classify = j.value("classify", true);
    opts.lag_multiple = j.value("lag_multiple", 0);
    const std::string mode = j.value("mode", "global");
    perinet::StabilityVerdict verdict;
    if (mode == "global") {
      verdict = perinet::check_global(model->spec, opts);
    } else if (mode == "periodic") {
      verdict = perinet::check_periodic(model->spec, opts);
    } else {
      throw perinet::config_error("stability: unknown mode '" + mode + "'");
    }
    *verdict_json = copy_out(dump(perinet::verdict_to_json(verdict)));
  });
}

int pn_approximate(const pn_model* model, const char* options_json, pn_model** out,
                   char** report_json) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "approximate: null argument");
    const perinet::Json j = parse_options(options_json);
    perinet::ApproxOptions opts;
    opts.q = j.value("q", 3);
    opts.tau = j.value("tau", perinet::select_tau(
                                  static_cast<double>(model->spec.kernel().effective_lags())));
    const std::string family = j.value("family", "odd");
    if (family == "odd") {
      opts.family = perinet::ExponentFamily::odd;
    } else if (family == "all") {
      opts.family = perinet::ExponentFamily::all;
    } else {
      throw perinet::config_error("approximate: unknown family '" + family + "'");
    }
    opts.refine = j.value("refine", true);
    opts.guard = j.value("guard", true);
    opts.lipschitz = model->spec.jump_rate().lipschitz();
    auto [kernel, report] = perinet::approximate_kernel(model->spec.kernel(), opts);
    if (report_json != nullptr) {
      *report_json = copy_out(dump(perinet::approx_report_to_json(report)));
    }
    *out = new pn_model{with_kernel(model->spec, std::move(kernel))};
  });
}

int pn_log_likelihood(const pn_model* model, const pn_series* data, int normalized, double* out) {
  return guarded([&] {
    require(model != nullptr && data != nullptr && out != nullptr,
            "log_likelihood: null argument");
    *out = perinet::log_likelihood(data->series, model->spec, normalized != 0);
  });
}

int pn_layout_build(const char* descriptor_json, char** layout_json) {
  return guarded([&] {
    require(descriptor_json != nullptr && layout_json != nullptr, "layout_build: null argument");
    const perinet::Json j = perinet::parse_json(descriptor_json, "layout descriptor");
    require(j.is_object(), "layout descriptor must be a json object");

    const perinet::LayoutKind kind =
        perinet::kind_from_name(j.at("kind").get<std::string>());
    const int seasons = j.value("seasons", 1);
    const int q = j.value("q", 1);
    const double tau = j.value("tau", 1.0);
    const perinet::ExponentFamily family = [&] {
      const std::string name = j.value("family", "odd");
      if (name == "odd") return perinet::ExponentFamily::odd;
      if (name == "all") return perinet::ExponentFamily::all;
      throw perinet::config_error("layout descriptor: unknown family '" + name + "'");
    }();
    const perinet::SeasonIndexing indexing = [&] {
      const std::string name = j.value("indexing", "by_target");
      if (name == "by_target") return perinet::SeasonIndexing::by_target;
      if (name == "by_source") return perinet::SeasonIndexing::by_source;
      throw perinet::config_error("layout descriptor: unknown indexing '" + name + "'");
    }();
    const perinet::JumpRate rate = j.contains("rate")
                                       ? perinet::jump_rate_from_json(j.at("rate"))
                                       : perinet::JumpRate::identity();

    std::optional<perinet::NetworkSpec> net;
    if (j.contains("network")) {
      net = perinet::network_from_json(j.at("network"));
    } else if (j.contains("adjacency")) {
      std::vector<std::string> names;
      if (j.contains("node_names")) names = j.at("node_names").get<std::vector<std::string>>();
      const int dimension = j.contains("dimension") ? j.at("dimension").get<int>()
                                                    : static_cast<int>(names.size());
      require(dimension > 0,
              "layout descriptor: adjacency needs a dimension or an explicit node_names list");
      net = perinet::load_adjacency(j.at("adjacency").get<std::string>(), dimension,
                                    j.value("symmetric", false), std::move(names));
    }

    perinet::ParamLayout layout;
    switch (kind) {
      case perinet::LayoutKind::general_exp_poly:
        require(j.contains("dimension"), "layout descriptor: general kind needs a dimension");
        layout = perinet::ParamLayout::general(seasons, j.at("dimension").get<int>(), q, tau,
                                               family, indexing, rate);
        break;
      case perinet::LayoutKind::network_exp_poly:
        require(net.has_value(), "layout descriptor: network kind needs a network or adjacency");
        layout = perinet::ParamLayout::network_poly(seasons, *net, q, tau, family, indexing, rate);
        break;
      case perinet::LayoutKind::trig_network:
        require(net.has_value(), "layout descriptor: network kind needs a network or adjacency");
        require(j.contains("period"), "layout descriptor: trig kind needs a period");
        layout = perinet::ParamLayout::trig(*net, j.at("period").get<double>(),
                                            j.value("harmonics", 1), q, tau, family, rate);
        break;
      case perinet::LayoutKind::lagged_network:
        require(net.has_value(), "layout descriptor: network kind needs a network or adjacency");
        layout = perinet::ParamLayout::lagged(*net, j.value("lags", 1), seasons, rate);
        break;
    }
    if (j.contains("coef_bound")) layout.coef_bound = j.at("coef_bound").get<double>();
    if (j.contains("baseline_bound")) layout.baseline_bound = j.at("baseline_bound").get<double>();
    layout.freeze_kernel = j.value("freeze_kernel", false);
    layout.validate();
    *layout_json = copy_out(dump(perinet::layout_to_json(layout)));
  });
}

int pn_fit(const pn_series* data, const char* layout_json, const char* options_json,
           char** fit_json) {
  return guarded([&] {
    require(data != nullptr && layout_json != nullptr && fit_json != nullptr,
            "fit: null argument");
    const perinet::ParamLayout layout =
        perinet::layout_from_json(perinet::parse_json(layout_json, "layout"));
    const perinet::FitOptions opts = fit_options_from_json(parse_options(options_json));
    const perinet::FitResult fit = perinet::fit_mle(data->series, layout, opts);
    *fit_json = copy_out(dump(perinet::fit_to_json(fit)));
  });
}

int pn_fit_curves(const char* fit_json, int lags, char** curves_json) {
  return guarded([&] {
    require(fit_json != nullptr && curves_json != nullptr, "fit_curves: null argument");
    const perinet::FitResult fit =
        perinet::fit_from_json(perinet::parse_json(fit_json, "fit record"));
    if (lags <= 0) {
      const std::int64_t effective = fit.model->kernel().effective_lags();
      lags = static_cast<int>(std::min<std::int64_t>(effective, 200));
    }
    const perinet::ReconstructedKernels curves = perinet::reconstruct_kernels(fit, lags);
    perinet::Json j;
    j["seasons"] = curves.seasons;
    j["lags"] = curves.lags;
    if (!curves.self.empty()) {
      j["self"] = curves.self;
      j["neighbor"] = curves.neighbor;
    } else {
      perinet::Json seasons = perinet::Json::array();
      for (const auto& season : curves.matrices) {
        perinet::Json per_lag = perinet::Json::array();
        for (const perinet::Matrix& m : season) per_lag.push_back(perinet::matrix_to_json(m));
        seasons.push_back(std::move(per_lag));
      }
      j["matrices"] = std::move(seasons);
    }
    *curves_json = copy_out(dump(j));
  });
}

int pn_rolling_forecast(const pn_series* data, const char* options_json, char** report_json) {
  return guarded([&] {
    require(data != nullptr && report_json != nullptr, "rolling_forecast: null argument");
    const perinet::Json j = parse_options(options_json);
    require(j.contains("split"), "rolling_forecast: options need a split index");

    perinet::RollingOptions opts;
    opts.horizon = j.value("horizon", 1);
    opts.mc.paths = j.value("paths", opts.mc.paths);
    opts.mc.seed = j.value("seed", std::uint64_t{0});
    opts.mc.replicate = j.value("replicate", std::uint64_t{0});

    std::string name = j.value("name", std::string{});
    double loglik = 0.0;
    double bic_value = 0.0;
    bool has_stats = false;

    std::optional<perinet::ModelSpec> spec;
    if (j.contains("fit")) {
      perinet::FitResult fit = perinet::fit_from_json(j.at("fit"));
      spec = *fit.model;
      loglik = fit.loglik;
      bic_value = perinet::bic(fit.loglik, fit.parameter_count, fit.observation_count);
      has_stats = true;
      if (j.value("refit", false)) {
        opts.refit = fit.layout;
        opts.refit_options = fit_options_from_json(j);
        opts.refit_options.init = fit.gamma;
      }
      if (name.empty()) name = perinet::kind_name(fit.layout.kind);
    } else if (j.contains("model")) {
      spec = perinet::model_from_json(j.at("model"));
      require(!j.value("refit", false),
              "rolling_forecast: refit needs a fit record, not a bare model");
    } else {
      throw perinet::config_error("rolling_forecast: options need a fit record or a model");
    }
    if (name.empty()) name = "model";

    perinet::ForecastReport report =
        perinet::rolling_forecast(*spec, data->series, j.at("split").get<std::int64_t>(), opts);
    for (perinet::ModelForecast& entry : report.models) {
      entry.name = name;
      if (has_stats) {
        entry.loglik = loglik;
        entry.bic = bic_value;
        entry.has_fit_stats = true;
      }
    }
    *report_json = copy_out(dump(perinet::forecast_report_to_json(report)));
  });
}

int pn_compare_reports(const char* const* report_jsons, size_t count, char** merged_json) {
  return guarded([&] {
    require(report_jsons != nullptr && merged_json != nullptr, "compare: null argument");
    require(count >= 2, "compare: need at least two reports");
    std::vector<perinet::ForecastReport> reports;
    reports.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      require(report_jsons[i] != nullptr, "compare: null report");
      reports.push_back(
          perinet::forecast_report_from_json(perinet::parse_json(report_jsons[i], "report")));
    }
    const perinet::ForecastReport merged = perinet::compare_reports(reports);
    *merged_json = copy_out(dump(perinet::forecast_report_to_json(merged)));
  });
}

int pn_run_experiment(const char* config_json, char** manifest_json) {
  return guarded([&] {
    require(config_json != nullptr, "run_experiment: null config");
    const perinet::ExperimentConfig cfg =
        perinet::experiment_config_from_json(perinet::parse_json(config_json, "experiment config"));
    const perinet::ExperimentResult result = perinet::run_experiment(cfg);
    if (manifest_json != nullptr) *manifest_json = copy_out(dump(result.manifest));
    if (!result.ok) {
      const std::string message = "experiment failed: " + result.error;
      switch (result.error_status) {
        case 2: throw perinet::config_error(message);
        case 4: throw perinet::io_error(message);
        default: throw perinet::numeric_error(message);
      }
    }
  });
}

}  // extern "C"
