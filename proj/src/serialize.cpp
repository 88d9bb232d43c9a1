#include "perinet/serialize.hpp"

#include <fstream>

namespace perinet {

namespace {

std::string require_string(const Json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw config_error(std::string(what) + ": missing string field '" + key + "'");
  }
  return j[key].get<std::string>();
}

double require_number(const Json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw config_error(std::string(what) + ": missing numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

int require_int(const Json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw config_error(std::string(what) + ": missing integer field '" + key + "'");
  }
  return j[key].get<int>();
}

const Json& require_field(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) {
    throw config_error(std::string(what) + ": missing field '" + key + "'");
  }
  return j[key];
}

std::vector<double> vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw config_error(std::string(what) + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw config_error(std::string(what) + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

ExponentFamily family_from_string(const std::string& s) {
  if (s == "odd") return ExponentFamily::odd;
  if (s == "all") return ExponentFamily::all;
  throw config_error("kernel: exponent family must be 'odd' or 'all', got '" + s + "'");
}

const char* family_to_string(ExponentFamily f) {
  return f == ExponentFamily::odd ? "odd" : "all";
}

Json loadings_to_json(const std::vector<std::vector<double>>& rows) {
  Json out = Json::array();
  for (const auto& row : rows) out.push_back(row);
  return out;
}

std::vector<std::vector<double>> loadings_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw config_error(std::string(what) + ": expected an array of arrays");
  std::vector<std::vector<double>> out;
  out.reserve(j.size());
  for (const auto& row : j) out.push_back(vector_from_json(row, what));
  return out;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw config_error(std::string(what) + ": expected a nonempty array of rows");
  }
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw config_error(std::string(what) + ": rows must be nonempty arrays");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw config_error(std::string(what) + ": ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw config_error(std::string(what) + ": expected numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

Json network_to_json(const NetworkSpec& net) {
  Json adj = Json::array();
  for (Eigen::Index i = 0; i < net.adjacency().rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < net.adjacency().cols(); ++j) row.push_back(net.adjacency()(i, j));
    adj.push_back(std::move(row));
  }
  Json out{{"adjacency", std::move(adj)}};
  if (!net.node_names().empty()) out["node_names"] = net.node_names();
  return out;
}

NetworkSpec network_from_json(const Json& j) {
  const Json& adj = require_field(j, "adjacency", "network");
  if (!adj.is_array() || adj.empty()) throw config_error("network: adjacency must be a matrix");
  const std::size_t d = adj.size();
  Eigen::MatrixXi m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (!adj[i].is_array() || adj[i].size() != d) {
      throw config_error("network: adjacency must be square");
    }
    for (std::size_t c = 0; c < d; ++c) {
      if (!adj[i][c].is_number_integer()) throw config_error("network: adjacency must be integer");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = adj[i][c].get<int>();
    }
  }
  std::vector<std::string> names;
  if (j.contains("node_names")) {
    for (const auto& n : j["node_names"]) names.push_back(n.get<std::string>());
  }
  return NetworkSpec(std::move(m), std::move(names));
}

Json kernel_to_json(const PeriodicKernel& kernel) {
  Json out;
  switch (kernel.kind()) {
    case KernelKind::general: {
      const auto& k = kernel.as_general();
      out["variant"] = "general";
      out["seasons"] = k.p;
      Json seasons = Json::array();
      for (const auto& lags : k.phi) {
        Json lag_list = Json::array();
        for (const Matrix& m : lags) lag_list.push_back(matrix_to_json(m));
        seasons.push_back(std::move(lag_list));
      }
      out["lags"] = std::move(seasons);
      break;
    }
    case KernelKind::network: {
      const auto& k = kernel.as_network();
      out["variant"] = "network";
      out["seasons"] = k.p;
      out["alpha"] = loadings_to_json(k.alpha);
      out["beta"] = loadings_to_json(k.beta);
      out["network"] = network_to_json(k.network);
      break;
    }
    case KernelKind::exp_poly: {
      const auto& k = kernel.as_exp_poly();
      out["variant"] = "exp_poly";
      out["seasons"] = k.p;
      out["q"] = k.q;
      out["tau"] = k.tau;
      out["family"] = family_to_string(k.family);
      Json seasons = Json::array();
      for (const auto& coefs : k.coef) {
        Json coef_list = Json::array();
        for (const Matrix& m : coefs) coef_list.push_back(matrix_to_json(m));
        seasons.push_back(std::move(coef_list));
      }
      out["coef"] = std::move(seasons);
      break;
    }
    case KernelKind::trig_exp_poly: {
      const auto& k = kernel.as_trig();
      out["variant"] = "trig_exp_poly";
      out["period"] = k.period;
      out["harmonics"] = k.harmonics;
      out["q"] = k.q;
      out["tau"] = k.tau;
      out["family"] = family_to_string(k.family);
      out["network"] = network_to_json(k.network);
      out["self"] = loadings_to_json(k.self);
      out["neighbor"] = loadings_to_json(k.neighbor);
      break;
    }
  }
  return out;
}

PeriodicKernel kernel_from_json(const Json& j) {
  const std::string variant = require_string(j, "variant", "kernel");
  if (variant == "general") {
    GeneralKernel k;
    k.p = require_int(j, "seasons", "kernel");
    const Json& seasons = require_field(j, "lags", "kernel");
    for (const auto& lag_list : seasons) {
      std::vector<Matrix> lags;
      for (const auto& m : lag_list) lags.push_back(matrix_from_json(m, "kernel lag"));
      k.phi.push_back(std::move(lags));
    }
    return PeriodicKernel(std::move(k));
  }
  if (variant == "network") {
    NetworkKernel k;
    k.p = require_int(j, "seasons", "kernel");
    k.network = network_from_json(require_field(j, "network", "kernel"));
    k.alpha = loadings_from_json(require_field(j, "alpha", "kernel"), "kernel alpha");
    k.beta = loadings_from_json(require_field(j, "beta", "kernel"), "kernel beta");
    return PeriodicKernel(std::move(k));
  }
  if (variant == "exp_poly") {
    ExpPolyKernel k;
    k.p = require_int(j, "seasons", "kernel");
    k.q = require_int(j, "q", "kernel");
    k.tau = require_number(j, "tau", "kernel");
    k.family = family_from_string(require_string(j, "family", "kernel"));
    const Json& seasons = require_field(j, "coef", "kernel");
    for (const auto& coef_list : seasons) {
      std::vector<Matrix> coefs;
      for (const auto& m : coef_list) coefs.push_back(matrix_from_json(m, "kernel coefficient"));
      k.coef.push_back(std::move(coefs));
    }
    return PeriodicKernel(std::move(k));
  }
  if (variant == "trig_exp_poly") {
    TrigExpPolyKernel k;
    k.period = require_number(j, "period", "kernel");
    k.harmonics = require_int(j, "harmonics", "kernel");
    k.q = require_int(j, "q", "kernel");
    k.tau = require_number(j, "tau", "kernel");
    k.family = family_from_string(require_string(j, "family", "kernel"));
    k.network = network_from_json(require_field(j, "network", "kernel"));
    k.self = loadings_from_json(require_field(j, "self", "kernel"), "kernel self loadings");
    k.neighbor =
        loadings_from_json(require_field(j, "neighbor", "kernel"), "kernel neighbor loadings");
    return PeriodicKernel(std::move(k));
  }
  throw config_error("kernel: unknown variant '" + variant + "'");
}

Json jump_rate_to_json(const JumpRate& rate) {
  Json out{{"variant", rate.name()}};
  if (rate.kind() == JumpRateKind::softplus_offset) out["floor"] = rate.floor();
  if (rate.kind() == JumpRateKind::custom) {
    throw config_error("jump rate: custom tables are in-process only and do not serialize");
  }
  return out;
}

JumpRate jump_rate_from_json(const Json& j) {
  const std::string variant =
      j.is_string() ? j.get<std::string>() : require_string(j, "variant", "jump rate");
  if (variant == "identity") return JumpRate::identity();
  if (variant == "softplus") return JumpRate::softplus();
  if (variant == "softplus_offset") {
    return JumpRate::softplus_offset(require_number(j, "floor", "jump rate"));
  }
  throw config_error("jump rate: unknown variant '" + variant + "'");
}

Json model_to_json(const ModelSpec& spec) {
  Json out;
  out["dimension"] = spec.dimension();
  out["indexing"] = spec.indexing() == SeasonIndexing::by_target ? "by_target" : "by_source";
  out["jump_rate"] = jump_rate_to_json(spec.jump_rate());
  out["kernel"] = kernel_to_json(spec.kernel());
  if (spec.trig_baseline()) {
    const TrigBaseline& b = spec.trig_baseline_spec();
    out["baseline"] = Json{{"variant", "trig"},
                           {"harmonics", b.harmonics},
                           {"coeffs", matrix_to_json(b.coeffs)}};
  } else if (spec.shared_baseline_nodes()) {
    Json values = Json::array();
    for (Eigen::Index v = 0; v < spec.seasonal_baseline().rows(); ++v) {
      values.push_back(spec.seasonal_baseline()(v, 0));
    }
    out["baseline"] = Json{{"variant", "seasonal_scalar"}, {"values", std::move(values)}};
  } else {
    out["baseline"] =
        Json{{"variant", "seasonal"}, {"values", matrix_to_json(spec.seasonal_baseline())}};
  }
  return out;
}

ModelSpec model_from_json(const Json& j) {
  PeriodicKernel kernel = kernel_from_json(require_field(j, "kernel", "model"));
  JumpRate rate = jump_rate_from_json(require_field(j, "jump_rate", "model"));
  const SeasonIndexing indexing = [&] {
    const std::string s = require_string(j, "indexing", "model");
    if (s == "by_target") return SeasonIndexing::by_target;
    if (s == "by_source") return SeasonIndexing::by_source;
    throw config_error("model: indexing must be 'by_target' or 'by_source', got '" + s + "'");
  }();
  const Json& baseline = require_field(j, "baseline", "model");
  const std::string variant = require_string(baseline, "variant", "baseline");
  if (variant == "trig") {
    TrigBaseline b;
    b.harmonics = require_int(baseline, "harmonics", "baseline");
    b.coeffs = matrix_from_json(require_field(baseline, "coeffs", "baseline"), "baseline coeffs");
    return ModelSpec(std::move(kernel), std::move(b), std::move(rate), indexing);
  }
  if (variant == "seasonal_scalar") {
    const std::vector<double> values =
        vector_from_json(require_field(baseline, "values", "baseline"), "baseline values");
    Matrix mu(static_cast<Eigen::Index>(values.size()), kernel.dimension());
    for (std::size_t v = 0; v < values.size(); ++v) mu.row(static_cast<Eigen::Index>(v)).setConstant(values[v]);
    return ModelSpec(std::move(kernel), std::move(mu), std::move(rate), indexing, true);
  }
  if (variant == "seasonal") {
    Matrix mu = matrix_from_json(require_field(baseline, "values", "baseline"), "baseline values");
    return ModelSpec(std::move(kernel), std::move(mu), std::move(rate), indexing, false);
  }
  throw config_error("baseline: unknown variant '" + variant + "'");
}

Json parse_json(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw config_error(what + ": malformed JSON");
  return j;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json(text, path);
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace perinet
