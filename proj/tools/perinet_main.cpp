// Command line front end. Everything goes through the C interface in
// perinet.h; this file only handles arguments, files, and output shaping.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "perinet.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct OwnedText {
  char* ptr = nullptr;
  ~OwnedText() { pn_string_free(ptr); }
  std::string str() const { return ptr == nullptr ? std::string() : std::string(ptr); }
};

struct OwnedModel {
  pn_model* ptr = nullptr;
  ~OwnedModel() { pn_model_free(ptr); }
};

struct OwnedSeries {
  pn_series* ptr = nullptr;
  ~OwnedSeries() { pn_series_free(ptr); }
};

// Exit codes: 0 success, 2 validation or file problems, 3 numeric failures.
int exit_code(int status) {
  if (status == PN_OK) return 0;
  return status == PN_ERR_NUMERIC ? 3 : 2;
}

struct CliError {
  std::string message;
  int code = 2;
};

void check(int status) {
  if (status != PN_OK) throw CliError{pn_last_error(), exit_code(status)};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{"cannot open " + path};
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string text) {
  if (text.empty() || text.back() != '\n') text.push_back('\n');
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{"cannot write " + path.string()};
  out << text;
  if (!out) throw CliError{"cannot write " + path.string()};
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{dir + ": cannot create output directory (" + ec.message() + ")"};
  return fs::path(dir);
}

json parse_json_text(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CliError{what + ": malformed JSON"};
  return j;
}

json parse_json_file(const std::string& path) { return parse_json_text(read_file(path), path); }

void load_model(const std::string& path, OwnedModel& model) {
  check(pn_model_from_json(read_file(path).c_str(), &model.ptr));
}

std::string fmt(double x) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), x);
  return std::string(buffer, result.ptr);
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

struct GlobalOpts {
  std::string out = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  bool seed_set = false;
  bool threads_set = false;
  bool out_set = false;
};

int cmd_simulate(const GlobalOpts& global, const std::string& model_path, std::int64_t steps,
                 int burn_in, std::uint64_t replicate, bool markov, bool no_intensities) {
  OwnedModel model;
  load_model(model_path, model);
  const json cfg = {{"steps", steps},        {"seed", global.seed}, {"replicate", replicate},
                    {"burn_in", burn_in},    {"markov", markov},    {"intensities", !no_intensities}};
  OwnedSeries series;
  check(pn_simulate(model.ptr, cfg.dump().c_str(), &series.ptr));

  const fs::path dir = prepare_out(global.out);
  const fs::path counts = dir / "counts.csv";
  check(pn_counts_save(series.ptr, counts.string().c_str()));
  std::cout << "wrote " << counts.string();
  if (!no_intensities) {
    const fs::path intens = dir / "intensities.csv";
    check(pn_intensities_save(series.ptr, intens.string().c_str()));
    std::cout << ", " << intens.string();
  }
  int64_t t = 0;
  int32_t d = 0;
  check(pn_series_shape(series.ptr, &t, &d));
  std::cout << " (" << t << " steps, " << d << " nodes)\n";
  return 0;
}

int cmd_stability(const GlobalOpts& global, const std::string& model_path, const std::string& mode,
                  double margin, int lag_multiple, bool no_classify) {
  OwnedModel model;
  load_model(model_path, model);
  const json opts = {{"mode", mode},
                     {"margin", margin},
                     {"lag_multiple", lag_multiple},
                     {"classify", !no_classify}};
  OwnedText verdict;
  check(pn_stability(model.ptr, opts.dump().c_str(), &verdict.ptr));

  const fs::path path = prepare_out(global.out) / "stability.json";
  write_file(path, verdict.str());
  const json v = parse_json_text(verdict.str(), "verdict");
  std::cout << mode << ": rho = " << fmt(v.value("rho", 0.0)) << ", "
            << (v.value("stable", false) ? "stable" : "not stable");
  if (v.contains("decay")) {
    std::cout << " (decay " << v["decay"].value("kind", "?") << ", rate "
              << fmt(v["decay"].value("rate", 0.0)) << ")";
  }
  std::cout << "\nwrote " << path.string() << '\n';
  return 0;
}

int cmd_approx(const GlobalOpts& global, const std::string& model_path, double tau, int q,
               const std::string& family, bool no_refine, bool no_guard) {
  OwnedModel model;
  load_model(model_path, model);
  json opts = {{"q", q}, {"family", family}, {"refine", !no_refine}, {"guard", !no_guard}};
  if (tau > 0.0) opts["tau"] = tau;

  OwnedModel approx;
  OwnedText report;
  check(pn_approximate(model.ptr, opts.dump().c_str(), &approx.ptr, &report.ptr));

  const fs::path dir = prepare_out(global.out);
  OwnedText approx_json;
  check(pn_model_to_json(approx.ptr, &approx_json.ptr));
  write_file(dir / "model_approx.json", approx_json.str());
  write_file(dir / "approx_report.json", report.str());

  const json r = parse_json_text(report.str(), "report");
  std::cout << "rho " << fmt(r.value("rho_target", 0.0)) << " -> " << fmt(r.value("rho_approx", 0.0));
  if (r.value("shrunk", false)) std::cout << " (shrunk x" << fmt(r.value("shrink_factor", 1.0)) << ")";
  std::cout << "\nwrote " << (dir / "model_approx.json").string() << ", "
            << (dir / "approx_report.json").string() << '\n';
  return 0;
}

struct FitFlags {
  std::string data_path;
  std::string layout_path;
  std::string kind;
  std::string adjacency;
  bool symmetric = false;
  int dimension = 0;
  int seasons = 1;
  int q = 1;
  double tau = 1.0;
  std::string family = "odd";
  int lags = 1;
  int harmonics = 1;
  double period = 0.0;
  std::string indexing = "by_target";
  std::string rate = "identity";
  double rate_floor = 0.0;
  bool freeze_kernel = false;
  double coef_bound = 0.0;
  double baseline_bound = 0.0;
  int max_iterations = 0;
  double gradient_tol = 0.0;
  bool curves = false;
  int curve_lags = 0;
};

std::string build_layout(const FitFlags& flags, pn_series* data) {
  if (!flags.layout_path.empty()) return read_file(flags.layout_path);
  if (flags.kind.empty()) throw CliError{"fit: pass --layout FILE or --kind"};

  json desc = {{"kind", flags.kind},       {"seasons", flags.seasons}, {"q", flags.q},
               {"tau", flags.tau},         {"family", flags.family},   {"lags", flags.lags},
               {"harmonics", flags.harmonics}, {"indexing", flags.indexing}};
  if (flags.period > 0.0) desc["period"] = flags.period;
  if (flags.rate == "softplus_offset") {
    desc["rate"] = {{"variant", "softplus_offset"}, {"floor", flags.rate_floor}};
  } else {
    desc["rate"] = flags.rate;
  }
  if (!flags.adjacency.empty()) {
    desc["adjacency"] = flags.adjacency;
    desc["symmetric"] = flags.symmetric;
    OwnedText names;
    check(pn_series_names(data, &names.ptr));
    desc["node_names"] = parse_json_text(names.str(), "node names");
  }
  int64_t steps = 0;
  int32_t nodes = 0;
  check(pn_series_shape(data, &steps, &nodes));
  desc["dimension"] = flags.dimension > 0 ? flags.dimension : nodes;
  if (flags.coef_bound > 0.0) desc["coef_bound"] = flags.coef_bound;
  if (flags.baseline_bound > 0.0) desc["baseline_bound"] = flags.baseline_bound;
  desc["freeze_kernel"] = flags.freeze_kernel;

  OwnedText layout;
  check(pn_layout_build(desc.dump().c_str(), &layout.ptr));
  return layout.str();
}

int cmd_fit(const GlobalOpts& global, const FitFlags& flags) {
  OwnedSeries data;
  check(pn_counts_load(flags.data_path.c_str(), &data.ptr));
  const std::string layout = build_layout(flags, data.ptr);

  json opts = {{"threads", global.threads}};
  if (flags.max_iterations > 0) opts["max_iterations"] = flags.max_iterations;
  if (flags.gradient_tol > 0.0) opts["gradient_tol"] = flags.gradient_tol;

  OwnedText fit;
  check(pn_fit(data.ptr, layout.c_str(), opts.dump().c_str(), &fit.ptr));

  const fs::path dir = prepare_out(global.out);
  write_file(dir / "fit.json", fit.str());
  std::cout << "wrote " << (dir / "fit.json").string() << '\n';

  if (flags.curves) {
    OwnedText curves;
    check(pn_fit_curves(fit.ptr, flags.curve_lags, &curves.ptr));
    write_file(dir / "curves.json", curves.str());
    std::cout << "wrote " << (dir / "curves.json").string() << '\n';
  }

  const json f = parse_json_text(fit.str(), "fit");
  std::cout << "loglik " << fmt(f.value("loglik", 0.0)) << " ("
            << f.value("parameter_count", 0) << " parameters, "
            << (f.value("converged", false) ? "converged" : "not converged") << ")\n";
  return 0;
}

int cmd_forecast(const GlobalOpts& global, const std::string& fit_path,
                 const std::string& model_path, const std::string& data_path, std::int64_t split,
                 int horizon, int paths, std::uint64_t replicate, bool refit,
                 const std::string& name) {
  OwnedSeries data;
  check(pn_counts_load(data_path.c_str(), &data.ptr));

  json opts = {{"split", split},   {"horizon", horizon},       {"paths", paths},
               {"seed", global.seed}, {"replicate", replicate}, {"refit", refit},
               {"threads", global.threads}};
  if (!name.empty()) opts["name"] = name;
  if (!fit_path.empty()) {
    opts["fit"] = parse_json_file(fit_path);
  } else if (!model_path.empty()) {
    opts["model"] = parse_json_file(model_path);
  } else {
    throw CliError{"forecast: pass --fit FILE or --model FILE"};
  }

  OwnedText report;
  check(pn_rolling_forecast(data.ptr, opts.dump().c_str(), &report.ptr));
  const fs::path path = prepare_out(global.out) / "forecast.json";
  write_file(path, report.str());

  const json r = parse_json_text(report.str(), "report");
  for (const json& m : r.at("models")) {
    const auto rmse = m.value("rmse", std::vector<double>{});
    std::cout << m.value("name", "model") << ": mean rmse " << fmt(mean_of(rmse));
    if (m.contains("bic")) std::cout << ", bic " << fmt(m["bic"].get<double>());
    std::cout << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_compare(const GlobalOpts& global, const std::vector<std::string>& report_paths) {
  std::vector<std::string> texts;
  texts.reserve(report_paths.size());
  for (const std::string& path : report_paths) texts.push_back(read_file(path));
  std::vector<const char*> pointers;
  pointers.reserve(texts.size());
  for (const std::string& text : texts) pointers.push_back(text.c_str());

  OwnedText merged;
  check(pn_compare_reports(pointers.data(), pointers.size(), &merged.ptr));
  const fs::path dir = prepare_out(global.out);
  write_file(dir / "compare.json", merged.str());

  const json r = parse_json_text(merged.str(), "merged report");
  const json& models = r.at("models");
  const auto names = r.value("node_names", std::vector<std::string>{});
  auto node_label = [&](int i) {
    return i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)]
                                              : "node_" + std::to_string(i + 1);
  };

  std::ostringstream csv;
  csv << "model_a,model_b,node,rmse_a,rmse_b,dm_statistic,p_value,p_adjusted\n";
  for (const json& pair : r.value("tests", json::array())) {
    const int a = pair.at("first").get<int>();
    const int b = pair.at("second").get<int>();
    const std::string name_a = models.at(a).value("name", "model_" + std::to_string(a));
    const std::string name_b = models.at(b).value("name", "model_" + std::to_string(b));
    const auto rmse_a = models.at(a).value("rmse", std::vector<double>{});
    const auto rmse_b = models.at(b).value("rmse", std::vector<double>{});
    const json& nodes = pair.at("nodes");
    const auto adjusted = pair.at("adjusted_p").get<std::vector<double>>();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      csv << name_a << ',' << name_b << ',' << node_label(static_cast<int>(i)) << ','
          << fmt(i < rmse_a.size() ? rmse_a[i] : 0.0) << ','
          << fmt(i < rmse_b.size() ? rmse_b[i] : 0.0) << ','
          << fmt(nodes[i].value("statistic", 0.0)) << ',' << fmt(nodes[i].value("p_value", 1.0))
          << ',' << fmt(i < adjusted.size() ? adjusted[i] : 1.0) << '\n';
    }
  }
  write_file(dir / "compare.csv", csv.str());

  for (const json& m : models) {
    const auto rmse = m.value("rmse", std::vector<double>{});
    std::cout << m.value("name", "model") << ": mean rmse " << fmt(mean_of(rmse));
    if (m.contains("bic")) std::cout << ", bic " << fmt(m["bic"].get<double>());
    std::cout << '\n';
  }
  std::cout << "wrote " << (dir / "compare.json").string() << ", "
            << (dir / "compare.csv").string() << '\n';
  return 0;
}

int cmd_experiment(const GlobalOpts& global, const std::string& config_path,
                   const std::string& preset, const std::string& id, int replicates,
                   std::int64_t steps) {
  json cfg = config_path.empty() ? json::object() : parse_json_file(config_path);
  if (!preset.empty()) cfg["preset"] = preset;
  if (!id.empty()) cfg["id"] = id;
  if (replicates > 0) cfg["replicates"] = replicates;
  if (steps > 0) cfg["steps"] = steps;
  if (global.seed_set || !cfg.contains("seed")) cfg["seed"] = global.seed;
  if (global.threads_set || !cfg.contains("threads")) cfg["threads"] = global.threads;
  if (global.out_set || !cfg.contains("out_dir")) cfg["out_dir"] = global.out;

  OwnedText manifest;
  const int status = pn_run_experiment(cfg.dump().c_str(), &manifest.ptr);
  if (manifest.ptr != nullptr) {
    const json m = parse_json_text(manifest.str(), "manifest");
    std::cout << "experiment " << m.value("id", "experiment") << ": "
              << (m.value("ok", false) ? "ok" : "failed") << ", "
              << m.value("outputs", std::vector<std::string>{}).size() << " outputs in "
              << cfg["out_dir"].get<std::string>() << '\n';
  }
  check(status);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodic multivariate count autoregressions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", pn_version());

  GlobalOpts global;
  auto* seed_opt = app.add_option("--seed", global.seed, "random seed (default 0)");
  auto* threads_opt = app.add_option("--threads", global.threads, "worker threads (default 1)");
  auto* out_opt = app.add_option("--out", global.out, "output directory (default .)");

  // simulate
  std::string sim_model;
  std::int64_t sim_steps = 0;
  int sim_burn = 0;
  std::uint64_t sim_replicate = 0;
  bool sim_markov = false, sim_no_intens = false;
  auto* sim = app.add_subcommand("simulate", "draw counts from a model");
  sim->add_option("--model", sim_model, "model JSON file")->required();
  sim->add_option("--steps", sim_steps, "steps to simulate")->required();
  sim->add_option("--burn-in", sim_burn, "burn-in periods dropped before t=1");
  sim->add_option("--replicate", sim_replicate, "replicate stream index");
  sim->add_flag("--markov", sim_markov, "use the recursive sampler (geometric kernels)");
  sim->add_flag("--no-intensities", sim_no_intens, "skip the intensity trace");

  // stability
  std::string st_model, st_mode = "global";
  double st_margin = 0.0;
  int st_lag_multiple = 0;
  bool st_no_classify = false;
  auto* st = app.add_subcommand("stability", "check the stability condition");
  st->add_option("--model", st_model, "model JSON file")->required();
  st->add_option("--mode", st_mode, "global or periodic")
      ->check(CLI::IsMember({"global", "periodic"}));
  st->add_option("--margin", st_margin, "require rho < 1 - margin");
  st->add_option("--lag-multiple", st_lag_multiple, "periodic companion depth (0 = auto)");
  st->add_flag("--no-classify", st_no_classify, "skip the decay classification");

  // approx
  std::string ap_model, ap_family = "odd";
  double ap_tau = 0.0;
  int ap_q = 3;
  bool ap_no_refine = false, ap_no_guard = false;
  auto* ap = app.add_subcommand("approx", "approximate the kernel by a geometric-decay one");
  ap->add_option("--model", ap_model, "model JSON file")->required();
  ap->add_option("--tau", ap_tau, "decay scale (default from the kernel horizon)");
  ap->add_option("--q", ap_q, "number of exponentials");
  ap->add_option("--family", ap_family, "exponent family")->check(CLI::IsMember({"odd", "all"}));
  ap->add_flag("--no-refine", ap_no_refine, "skip the absolute-error polish");
  ap->add_flag("--no-guard", ap_no_guard, "skip the stability shrink");

  // fit
  FitFlags fit_flags;
  auto* ft = app.add_subcommand("fit", "maximum likelihood fit");
  ft->add_option("--data", fit_flags.data_path, "counts CSV")->required();
  ft->add_option("--layout", fit_flags.layout_path, "parametrization JSON (overrides --kind)");
  ft->add_option("--kind", fit_flags.kind,
                 "general_exp_poly | network_exp_poly | trig_network | lagged_network");
  ft->add_option("--adjacency", fit_flags.adjacency, "edge list CSV");
  ft->add_flag("--symmetric", fit_flags.symmetric, "mirror every edge");
  ft->add_option("--dimension", fit_flags.dimension, "node count (default from data)");
  ft->add_option("--seasons", fit_flags.seasons, "period length");
  ft->add_option("--q", fit_flags.q, "number of exponentials");
  ft->add_option("--tau", fit_flags.tau, "decay scale");
  ft->add_option("--family", fit_flags.family, "exponent family")
      ->check(CLI::IsMember({"odd", "all"}));
  ft->add_option("--lags", fit_flags.lags, "stored lags (lagged_network)");
  ft->add_option("--harmonics", fit_flags.harmonics, "Fourier harmonics (trig_network)");
  ft->add_option("--period", fit_flags.period, "real period (trig_network)");
  ft->add_option("--indexing", fit_flags.indexing, "kernel season source")
      ->check(CLI::IsMember({"by_target", "by_source"}));
  ft->add_option("--rate", fit_flags.rate, "jump rate")
      ->check(CLI::IsMember({"identity", "softplus", "softplus_offset"}));
  ft->add_option("--rate-floor", fit_flags.rate_floor, "offset for softplus_offset");
  ft->add_flag("--freeze-kernel", fit_flags.freeze_kernel, "fit baselines only");
  ft->add_option("--coef-bound", fit_flags.coef_bound, "coefficient box half-width");
  ft->add_option("--baseline-bound", fit_flags.baseline_bound, "baseline box half-width");
  ft->add_option("--max-iter", fit_flags.max_iterations, "optimizer iteration cap");
  ft->add_option("--grad-tol", fit_flags.gradient_tol, "optimizer gradient tolerance");
  ft->add_flag("--curves", fit_flags.curves, "also write the implied lag curves");
  ft->add_option("--curve-lags", fit_flags.curve_lags, "lags to sample (0 = kernel horizon)");

  // forecast
  std::string fc_fit, fc_model, fc_data, fc_name;
  std::int64_t fc_split = 0;
  int fc_horizon = 1, fc_paths = 2000;
  std::uint64_t fc_replicate = 0;
  bool fc_refit = false;
  auto* fc = app.add_subcommand("forecast", "rolling conditional-mean forecast");
  fc->add_option("--fit", fc_fit, "fit record JSON");
  fc->add_option("--model", fc_model, "model JSON (alternative to --fit)");
  fc->add_option("--data", fc_data, "counts CSV")->required();
  fc->add_option("--split", fc_split, "rows used as the first conditioning window")->required();
  fc->add_option("--horizon", fc_horizon, "steps per anchor");
  fc->add_option("--paths", fc_paths, "Monte Carlo trajectories for nonlinear rates");
  fc->add_option("--replicate", fc_replicate, "replicate stream index");
  fc->add_option("--name", fc_name, "label in the report");
  fc->add_flag("--refit", fc_refit, "refit at every anchor (needs --fit)");

  // compare
  std::vector<std::string> cp_reports;
  auto* cp = app.add_subcommand("compare", "merge forecast reports and test accuracy");
  cp->add_option("--report", cp_reports, "forecast report JSON (repeat)")
      ->required()
      ->expected(-2);

  // experiment
  std::string ex_config, ex_preset, ex_id;
  int ex_replicates = 0;
  std::int64_t ex_steps = 0;
  auto* ex = app.add_subcommand("experiment", "run a preset or staged bundle");
  ex->add_option("--config", ex_config, "experiment config JSON");
  ex->add_option("--preset", ex_preset, "coupling-decay or estimator-recovery");
  ex->add_option("--id", ex_id, "bundle id");
  ex->add_option("--replicates", ex_replicates, "Monte Carlo replicates (0 = preset default)");
  ex->add_option("--steps", ex_steps, "horizon override (0 = preset default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  global.seed_set = seed_opt->count() > 0;
  global.threads_set = threads_opt->count() > 0;
  global.out_set = out_opt->count() > 0;

  try {
    if (sim->parsed()) {
      return cmd_simulate(global, sim_model, sim_steps, sim_burn, sim_replicate, sim_markov,
                          sim_no_intens);
    }
    if (st->parsed()) {
      return cmd_stability(global, st_model, st_mode, st_margin, st_lag_multiple, st_no_classify);
    }
    if (ap->parsed()) {
      return cmd_approx(global, ap_model, ap_tau, ap_q, ap_family, ap_no_refine, ap_no_guard);
    }
    if (ft->parsed()) return cmd_fit(global, fit_flags);
    if (fc->parsed()) {
      return cmd_forecast(global, fc_fit, fc_model, fc_data, fc_split, fc_horizon, fc_paths,
                          fc_replicate, fc_refit, fc_name);
    }
    if (cp->parsed()) return cmd_compare(global, cp_reports);
    if (ex->parsed()) {
      return cmd_experiment(global, ex_config, ex_preset, ex_id, ex_replicates, ex_steps);
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
