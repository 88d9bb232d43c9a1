#include "perinet/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace perinet {

namespace {

bool geometric_kernel(const PeriodicKernel& kernel) {
  return kernel.kind() == KernelKind::exp_poly || kernel.kind() == KernelKind::trig_exp_poly;
}

struct GeomGrid {
  int q = 1;
  std::vector<double> decay;
};

GeomGrid geom_grid(const PeriodicKernel& kernel) {
  GeomGrid grid;
  double tau = 1.0;
  ExponentFamily family = ExponentFamily::odd;
  if (kernel.kind() == KernelKind::exp_poly) {
    grid.q = kernel.as_exp_poly().q;
    tau = kernel.as_exp_poly().tau;
    family = kernel.as_exp_poly().family;
  } else {
    grid.q = kernel.as_trig().q;
    tau = kernel.as_trig().tau;
    family = kernel.as_trig().family;
  }
  grid.decay.resize(static_cast<std::size_t>(grid.q));
  for (int m = 1; m <= grid.q; ++m) {
    grid.decay[static_cast<std::size_t>(m - 1)] =
        std::exp(-static_cast<double>(exponent_rate(family, m)) / tau);
  }
  return grid;
}

// eta += G_m(t) x.
void add_coefficient(const PeriodicKernel& kernel, std::int64_t t, int m, const Vector& x,
                     Vector& eta) {
  if (kernel.kind() == KernelKind::exp_poly) {
    const auto& k = kernel.as_exp_poly();
    eta.noalias() +=
        k.coef[static_cast<std::size_t>(season_of(t, k.p) - 1)][static_cast<std::size_t>(m - 1)] *
        x;
    return;
  }
  const auto& k = kernel.as_trig();
  const double td = static_cast<double>(t);
  const double a = trig_loading(k.self[static_cast<std::size_t>(m - 1)], td, k.period);
  const double b = trig_loading(k.neighbor[static_cast<std::size_t>(m - 1)], td, k.period);
  eta.noalias() += a * x + b * (k.network.weights() * x);
}

// Real-valued twin of the recursive simulation state; predicted means act
// as pseudo-counts.
struct MeanState {
  std::int64_t next_time = 1;
  std::vector<Vector> xi;
};

void mean_advance(const ModelSpec& spec, const GeomGrid& grid, MeanState& state,
                  const Vector& y) {
  for (int m = 1; m <= grid.q; ++m) {
    const double r = grid.decay[static_cast<std::size_t>(m - 1)];
    Vector& xi = state.xi[static_cast<std::size_t>(m - 1)];
    if (spec.indexing() == SeasonIndexing::by_target) {
      xi = r * (xi + y);
    } else {
      Vector gain = Vector::Zero(spec.dimension());
      add_coefficient(spec.kernel(), state.next_time, m, y, gain);
      xi = r * (xi + gain);
    }
  }
  state.next_time += 1;
}

Vector mean_eta(const ModelSpec& spec, const GeomGrid& grid, const MeanState& state) {
  Vector eta = spec.baseline_at(state.next_time);
  if (spec.indexing() == SeasonIndexing::by_target) {
    for (int m = 1; m <= grid.q; ++m) {
      add_coefficient(spec.kernel(), state.next_time, m, state.xi[static_cast<std::size_t>(m - 1)],
                      eta);
    }
  } else {
    for (int m = 1; m <= grid.q; ++m) eta += state.xi[static_cast<std::size_t>(m - 1)];
  }
  return eta;
}

Vector apply_rate(const JumpRate& rate, const Vector& eta) {
  Vector lambda(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) lambda[i] = rate(eta[i]);
  return lambda;
}

// Exact conditional-mean recursion through the recursive state. Also serves
// any rate at horizon one, where no feedback happens. Negative read-outs
// (possible only when the model is invalid at that point) are truncated to
// zero before feedback.
Matrix recursion_geometric(const ModelSpec& spec, const CountSeries& history, int horizon) {
  const GeomGrid grid = geom_grid(spec.kernel());
  MeanState state;
  state.next_time = history.t0;
  state.xi.assign(static_cast<std::size_t>(grid.q), Vector::Zero(spec.dimension()));
  for (std::int64_t r = 0; r < history.steps(); ++r) {
    mean_advance(spec, grid, state, history.counts.row(r).cast<double>().transpose());
  }

  Matrix predictions(horizon, spec.dimension());
  for (int j = 1; j <= horizon; ++j) {
    const Vector lambda = apply_rate(spec.jump_rate(), mean_eta(spec, grid, state));
    predictions.row(j - 1) = lambda.transpose();
    if (j < horizon) mean_advance(spec, grid, state, lambda.cwiseMax(0.0));
  }
  return predictions;
}

// Same recursion by the explicit lag sum, for kernels stored lag by lag.
Matrix recursion_lagwise(const ModelSpec& spec, const CountSeries& history, int horizon) {
  const PeriodicKernel& kernel = spec.kernel();
  const int d = spec.dimension();
  const std::int64_t steps = history.steps();
  const int reach = kernel.effective_lags();

  Matrix path(steps + horizon, d);
  if (steps > 0) path.topRows(steps) = history.counts.cast<double>();

  Matrix predictions(horizon, d);
  for (int j = 1; j <= horizon; ++j) {
    const std::int64_t row = steps + j - 1;
    const std::int64_t t = history.t0 + row;
    Vector eta = spec.baseline_at(t);
    for (int lag = 1; lag <= reach && lag <= row; ++lag) {
      const std::int64_t kt = spec.kernel_time(t, t - lag);
      eta.noalias() += kernel.eval(kt, lag) * path.row(row - lag).transpose();
    }
    const Vector lambda = apply_rate(spec.jump_rate(), eta);
    predictions.row(j - 1) = lambda.transpose();
    path.row(row) = lambda.cwiseMax(0.0).transpose();
  }
  return predictions;
}

// Averages the intensity path over simulated trajectories; the trajectory
// draws come from one substream per path so the result is independent of
// evaluation order.
Matrix monte_carlo(const ModelSpec& spec, const CountSeries& history, int horizon,
                   const ForecastOptions& opts) {
  if (opts.paths < 1) throw config_error("forecast: paths must be >= 1");
  const int d = spec.dimension();
  const bool geometric = geometric_kernel(spec.kernel());
  const std::int64_t last_time = history.t0 + history.steps() - 1;

  MarkovState base;
  if (geometric) base = markov_state_from_history(spec, history.counts, last_time);

  const int reach = geometric ? 0 : spec.kernel().effective_lags();
  Matrix acc = Matrix::Zero(horizon, d);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> draw(d);
  for (int n = 0; n < opts.paths; ++n) {
    SubstreamRng rng(opts.seed, StreamPurpose::forecast_paths, opts.replicate,
                     static_cast<std::uint64_t>(n), 0);
    if (geometric) {
      MarkovState state = base;
      for (int j = 1; j <= horizon; ++j) {
        const Vector lambda = markov_intensity(spec, state);
        acc.row(j - 1) += lambda.transpose();
        if (j == horizon) break;
        for (int i = 0; i < d; ++i) draw[i] = poisson_draw(lambda[i], rng);
        markov_advance(spec, state, draw);
      }
    } else {
      CountMatrix path(history.steps() + horizon, d);
      if (history.steps() > 0) path.topRows(history.steps()) = history.counts;
      for (int j = 1; j <= horizon; ++j) {
        const std::int64_t row = history.steps() + j - 1;
        const std::int64_t t = history.t0 + row;
        Vector eta = spec.baseline_at(t);
        for (int lag = 1; lag <= reach && lag <= row; ++lag) {
          const std::int64_t kt = spec.kernel_time(t, t - lag);
          eta.noalias() +=
              spec.kernel().eval(kt, lag) * path.row(row - lag).cast<double>().transpose();
        }
        const Vector lambda = apply_rate(spec.jump_rate(), eta);
        acc.row(j - 1) += lambda.transpose();
        if (j == horizon) break;
        for (int i = 0; i < d; ++i) path(row, i) = poisson_draw(lambda[i], rng);
      }
    }
  }
  return acc / static_cast<double>(opts.paths);
}

DmResult guarded_dm(const std::vector<double>& errors_a, const std::vector<double>& errors_b,
                    int horizon) {
  try {
    return diebold_mariano(errors_a, errors_b, horizon);
  } catch (const numeric_error&) {
    DmResult even;
    even.statistic = 0.0;
    even.p_value = 1.0;
    even.mean_differential = 0.0;
    return even;
  }
}

}  // namespace

Matrix forecast(const ModelSpec& spec, const CountSeries& history, int horizon,
                const ForecastOptions& opts) {
  if (horizon < 1) throw config_error("forecast: horizon must be >= 1");
  if (history.steps() > 0) {
    validate_series(history);
    if (history.dimension() != spec.dimension()) {
      throw config_error("forecast: history width does not match the model dimension");
    }
  }
  const bool exact = spec.jump_rate().kind() == JumpRateKind::identity || horizon == 1;
  if (exact) {
    return geometric_kernel(spec.kernel()) ? recursion_geometric(spec, history, horizon)
                                           : recursion_lagwise(spec, history, horizon);
  }
  return monte_carlo(spec, history, horizon, opts);
}

ForecastReport rolling_forecast(const ModelSpec& spec, const CountSeries& data,
                                std::int64_t split, const RollingOptions& opts) {
  validate_series(data);
  if (opts.horizon < 1) throw config_error("rolling: horizon must be >= 1");
  if (split < 1 || split >= data.steps()) {
    throw config_error("rolling: split must leave at least one row on each side");
  }
  if (data.dimension() != spec.dimension()) {
    throw config_error("rolling: data width does not match the model dimension");
  }

  const std::int64_t tail = data.steps() - split;
  const int d = data.dimension();
  ForecastReport report;
  report.horizon = opts.horizon;
  report.origin = data.time_of(split - 1);
  report.actuals = data.counts.bottomRows(tail).cast<double>();
  report.node_names = data.node_names;

  Matrix predictions(tail, d);
  ModelSpec current = spec;
  Vector warm;
  for (std::int64_t anchor = split; anchor < data.steps(); anchor += opts.horizon) {
    const std::int64_t block = std::min<std::int64_t>(opts.horizon, data.steps() - anchor);
    CountSeries seen;
    seen.counts = data.counts.topRows(anchor);
    seen.t0 = data.t0;
    seen.node_names = data.node_names;
    if (opts.refit.has_value()) {
      FitOptions fit_opts = opts.refit_options;
      if (warm.size() > 0) fit_opts.init = warm;
      const FitResult fit = fit_mle(seen, *opts.refit, fit_opts);
      warm = fit.gamma;
      current = *fit.model;
    }
    ForecastOptions mc = opts.mc;
    mc.replicate = opts.mc.replicate + static_cast<std::uint64_t>(anchor);
    predictions.middleRows(anchor - split, block) =
        forecast(current, seen, static_cast<int>(block), mc);
  }

  ModelForecast entry;
  entry.predictions = std::move(predictions);
  entry.rmse = rmse(entry.predictions, report.actuals);
  report.models.push_back(std::move(entry));
  return report;
}

ForecastReport compare_reports(const std::vector<ForecastReport>& reports) {
  if (reports.empty()) throw config_error("compare: no reports given");
  ForecastReport merged;
  merged.horizon = reports.front().horizon;
  merged.origin = reports.front().origin;
  merged.actuals = reports.front().actuals;
  for (const ForecastReport& report : reports) {
    if (report.horizon != merged.horizon || report.origin != merged.origin) {
      throw config_error("compare: reports disagree on the forecast window");
    }
    if (merged.node_names.empty()) merged.node_names = report.node_names;
    if (report.actuals.rows() != merged.actuals.rows() ||
        report.actuals.cols() != merged.actuals.cols() ||
        (report.actuals - merged.actuals).cwiseAbs().maxCoeff() != 0.0) {
      throw config_error("compare: reports disagree on the observed tail");
    }
    for (const ModelForecast& model : report.models) {
      if (model.predictions.rows() != merged.actuals.rows() ||
          model.predictions.cols() != merged.actuals.cols()) {
        throw config_error("compare: prediction matrix shape does not match the tail");
      }
      merged.models.push_back(model);
      if (merged.models.back().rmse.size() == 0) {
        merged.models.back().rmse = rmse(model.predictions, merged.actuals);
      }
    }
  }

  const int d = static_cast<int>(merged.actuals.cols());
  const std::int64_t n = merged.actuals.rows();
  for (std::size_t a = 0; a < merged.models.size(); ++a) {
    for (std::size_t b = a + 1; b < merged.models.size(); ++b) {
      PairAccuracy pair;
      pair.first = static_cast<int>(a);
      pair.second = static_cast<int>(b);
      std::vector<double> raw;
      raw.reserve(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) {
        std::vector<double> ea(static_cast<std::size_t>(n)), eb(static_cast<std::size_t>(n));
        for (std::int64_t t = 0; t < n; ++t) {
          ea[static_cast<std::size_t>(t)] =
              merged.models[a].predictions(t, i) - merged.actuals(t, i);
          eb[static_cast<std::size_t>(t)] =
              merged.models[b].predictions(t, i) - merged.actuals(t, i);
        }
        pair.node_tests.push_back(guarded_dm(ea, eb, merged.horizon));
        raw.push_back(pair.node_tests.back().p_value);
      }
      pair.adjusted_p = bh_adjust(raw);
      merged.tests.push_back(std::move(pair));
    }
  }
  return merged;
}

Json forecast_report_to_json(const ForecastReport& report) {
  Json j;
  j["horizon"] = report.horizon;
  j["origin"] = report.origin;
  j["actuals"] = matrix_to_json(report.actuals);
  if (!report.node_names.empty()) j["node_names"] = report.node_names;
  Json models = Json::array();
  for (const ModelForecast& model : report.models) {
    Json m;
    m["name"] = model.name;
    m["predictions"] = matrix_to_json(model.predictions);
    m["rmse"] = std::vector<double>(model.rmse.data(), model.rmse.data() + model.rmse.size());
    if (model.has_fit_stats) {
      m["loglik"] = model.loglik;
      m["bic"] = model.bic;
    }
    models.push_back(std::move(m));
  }
  j["models"] = std::move(models);
  if (!report.tests.empty()) {
    Json tests = Json::array();
    for (const PairAccuracy& pair : report.tests) {
      Json t;
      t["first"] = pair.first;
      t["second"] = pair.second;
      Json nodes = Json::array();
      for (const DmResult& dm : pair.node_tests) {
        nodes.push_back({{"statistic", dm.statistic},
                         {"p_value", dm.p_value},
                         {"mean_differential", dm.mean_differential}});
      }
      t["nodes"] = std::move(nodes);
      t["adjusted_p"] = pair.adjusted_p;
      tests.push_back(std::move(t));
    }
    j["tests"] = std::move(tests);
  }
  return j;
}

ForecastReport forecast_report_from_json(const Json& j) {
  ForecastReport report;
  report.horizon = j.at("horizon").get<int>();
  report.origin = j.at("origin").get<std::int64_t>();
  report.actuals = matrix_from_json(j.at("actuals"), "actuals");
  if (j.contains("node_names")) report.node_names = j["node_names"].get<std::vector<std::string>>();
  for (const Json& m : j.at("models")) {
    ModelForecast model;
    model.name = m.value("name", std::string());
    model.predictions = matrix_from_json(m.at("predictions"), "predictions");
    if (m.contains("rmse")) {
      const auto values = m["rmse"].get<std::vector<double>>();
      model.rmse = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
    if (m.contains("loglik") && m.contains("bic")) {
      model.loglik = m["loglik"].get<double>();
      model.bic = m["bic"].get<double>();
      model.has_fit_stats = true;
    }
    report.models.push_back(std::move(model));
  }
  if (j.contains("tests")) {
    for (const Json& t : j["tests"]) {
      PairAccuracy pair;
      pair.first = t.at("first").get<int>();
      pair.second = t.at("second").get<int>();
      for (const Json& node : t.at("nodes")) {
        DmResult dm;
        dm.statistic = node.at("statistic").get<double>();
        dm.p_value = node.at("p_value").get<double>();
        dm.mean_differential = node.value("mean_differential", 0.0);
        pair.node_tests.push_back(dm);
      }
      pair.adjusted_p = t.at("adjusted_p").get<std::vector<double>>();
      report.tests.push_back(std::move(pair));
    }
  }
  return report;
}

}  // namespace perinet
