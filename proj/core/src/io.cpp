#include "vmsid/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vmsid/errors.hpp"

namespace vmsid {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json mat_json(const Mat& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Mat json_mat(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(std::string(what) + ": expected an array of rows");
  const size_t r = j.size(), c = j[0].size();
  Mat M(r, c);
  for (size_t i = 0; i < r; ++i) {
    if (!j[i].is_array() || j[i].size() != c) throw ConfigError(std::string(what) + ": ragged rows");
    for (size_t k = 0; k < c; ++k) M(i, k) = j[i][k].get<double>();
  }
  return M;
}

Vec json_vec(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string model_to_json(const StateSpaceModel& m) {
  return json{{"A", mat_json(m.A)}, {"B", mat_json(m.B)}, {"C", mat_json(m.C)}}.dump(2);
}

StateSpaceModel model_from_json(const std::string& text) {
  json j = parse(text, "model");
  try {
    StateSpaceModel m{json_mat(j.at("A"), "A"), json_mat(j.at("B"), "B"), json_mat(j.at("C"), "C")};
    try {
      m.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

std::string markov_to_json(const MarkovMatrix& G) { return json{{"t", G.t}, {"G", mat_json(G.G)}}.dump(2); }

std::string realization_to_json(const Realization& r) {
  return json{{"A", mat_json(r.A_hat)},
              {"B", mat_json(r.B_hat)},
              {"C", mat_json(r.C_hat)},
              {"singular_values", vec_json(r.singular_values)}}
      .dump(2);
}

std::string deviation_to_json(const DeviationResult& d) {
  const char* method = d.method == Method::exact ? "exact" : d.method == Method::relaxed ? "relaxed" : "automatic";
  return json{{"J", d.J},
              {"J1", d.J1},
              {"J2", d.J2},
              {"J1_relaxed", d.J1_relaxed},
              {"J2_relaxed", d.J2_relaxed},
              {"relaxation_gap", d.relaxation_gap},
              {"method", method},
              {"w_star", vec_json(d.w_star)},
              {"p_star", vec_json(d.p_star)}}
      .dump(2);
}

std::string signal_to_json(const SignalLog& log) {
  json j;
  j["t0"] = log.t0;
  j["u"] = mat_json(log.u);
  j["y"] = mat_json(log.y);
  if (log.x) j["x"] = mat_json(*log.x);
  return j.dump();
}

SignalLog signal_from_json(const std::string& text) {
  json j = parse(text, "signal");
  SignalLog log;
  try {
    log.u = json_mat(j.at("u"), "u");
    log.y = json_mat(j.at("y"), "y");
    if (j.contains("x")) log.x = json_mat(j["x"], "x");
    log.t0 = j.value("t0", 0L);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("signal: ") + e.what());
  }
  return log;
}

void write_signal_csv(const SignalLog& log, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << "k";
  for (int i = 0; i < log.u.rows(); ++i) f << ",u_" << i + 1;
  for (int i = 0; i < log.y.rows(); ++i) f << ",y_" << i + 1;
  f << '\n';
  for (long k = 0; k < log.y.cols(); ++k) {
    f << log.t0 + k;
    for (int i = 0; i < log.u.rows(); ++i) f << ',' << num(k < log.u.cols() ? log.u(i, k) : 0.0);
    for (int i = 0; i < log.y.rows(); ++i) f << ',' << num(log.y(i, k));
    f << '\n';
  }
}

SignalLog read_signal_csv(const fs::path& path, int n, int p) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::string line;
  std::getline(f, line);
  std::vector<std::vector<double>> rows;
  long t0 = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<int>(row.size()) != 1 + n + p)
      throw ConfigError(path.string() + ": expected " + std::to_string(1 + n + p) + " columns");
    if (rows.empty()) t0 = static_cast<long>(row[0]);
    rows.push_back(row);
  }
  SignalLog log;
  log.t0 = t0;
  log.u.resize(p, rows.size());
  log.y.resize(n, rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    for (int i = 0; i < p; ++i) log.u(i, k) = rows[k][1 + i];
    for (int i = 0; i < n; ++i) log.y(i, k) = rows[k][1 + p + i];
  }
  return log;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

// ---------------------------------------------------------------- config

namespace {

const char* method_name(Method m) {
  return m == Method::exact ? "exact" : m == Method::relaxed ? "relaxed" : "automatic";
}

Method parse_method(const std::string& s) {
  if (s == "exact") return Method::exact;
  if (s == "relaxed") return Method::relaxed;
  if (s == "automatic") return Method::automatic;
  throw ConfigError("unknown method: " + s);
}

void apply_override(json& root, const std::string& ov) {
  auto eq = ov.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value: " + ov);
  std::string key = ov.substr(0, eq), val = ov.substr(eq + 1);
  json v;
  try {
    v = json::parse(val);
  } catch (const json::exception&) {
    v = val;
  }
  std::string ptr = "/";
  for (char c : key) ptr += c == '.' ? '/' : c;
  root[json::json_pointer(ptr)] = v;
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text, const std::vector<std::string>& overrides) {
  json root = parse(text, "config");
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& ov : overrides) apply_override(root, ov);
  if (root.value("version", -1) != kConfigVersion)
    throw ConfigError("config: unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  ExperimentConfig cfg;
  try {
    const json model = root.value("model", json::object());
    std::string source = model.value("source", std::string("canonical"));
    if (source == "canonical") {
      cfg = ExperimentConfig::canonical_preset();
    } else if (source == "file") {
      cfg.source = ModelSource::file;
      cfg.model_path = model.at("path").get<std::string>();
      cfg.model = model_from_json(read_text(cfg.model_path));
      cfg.x0 = Vec::Zero(cfg.model.m());
    } else if (source == "random") {
      cfg.source = ModelSource::random;
      get_if(model, "order", cfg.random_order);
      std::uint64_t mseed = model.value("seed", std::uint64_t{1});
      Rng rng(mseed, 0, streams::model);
      cfg.model = random_model(cfg.random_order, 1, 1, rng, model.value("radius", 0.9));
      cfg.x0 = Vec::Zero(cfg.model.m());
    } else {
      throw ConfigError("config: unknown model source " + source);
    }
    if (model.contains("A")) {
      cfg.model = model_from_json(model.dump());
      cfg.x0 = Vec::Zero(cfg.model.m());
    }
    if (root.contains("x0")) cfg.x0 = json_vec(root["x0"], "x0");
    cfg.est = EstimatorConfig::defaults(cfg.model.m(), cfg.model.n(), cfg.model.p());

    const json noise = root.value("noise", json::object());
    double delta = noise.value("delta", cfg.noise.delta);
    std::string kind = noise.value("kind", std::string("uniform"));
    double frac = noise.value("sigma_frac", 0.5);
    if (kind == "uniform") cfg.noise = NoiseSpec::uniform(delta);
    else if (kind == "gaussian") cfg.noise = NoiseSpec::gaussian(delta, frac);
    else throw ConfigError("config: unknown noise kind " + kind);
    cfg.design.delta = delta;

    const json est = root.value("estimator", json::object());
    get_if(est, "h", cfg.est.h);
    get_if(est, "t", cfg.est.t);

    const json d = root.value("design", json::object());
    auto& D = cfg.design;
    get_if(d, "delta", D.delta);
    get_if(d, "y_M", D.y_M);
    get_if(d, "u_M", D.u_M);
    get_if(d, "epsilon", D.epsilon);
    get_if(d, "alpha_M", D.alpha_M);
    get_if(d, "horizon", D.horizon);
    get_if(d, "margin", D.margin);
    get_if(d, "u_margin", D.u_margin);
    get_if(d, "max_iters", D.max_iters);
    get_if(d, "tol", D.tol);
    get_if(d, "lr0_frac", D.lr0_frac);
    get_if(d, "grad_step", D.grad_step);
    get_if(d, "scenario_rounds", D.scenario_rounds);
    get_if(d, "init_length", D.init_length);
    get_if(d, "white_amplitude", D.white_amplitude);
    if (d.contains("method")) D.method = parse_method(d["method"].get<std::string>());
    if (d.contains("prediction_model")) {
      std::string pm = d["prediction_model"].get<std::string>();
      if (pm == "nominal") D.prediction = PredictionModel::nominal;
      else if (pm == "estimated") D.prediction = PredictionModel::estimated;
      else throw ConfigError("config: unknown prediction_model " + pm);
    }

    const json c = root.value("campaign", json::object());
    get_if(c, "trials", cfg.trials);
    get_if(c, "N_schedule", cfg.N_schedule);
    get_if(c, "seed", cfg.seed);
    get_if(c, "workers", cfg.workers);
    get_if(c, "max_failure_fraction", cfg.max_failure_fraction);
    if (c.contains("modes")) {
      cfg.modes.clear();
      for (const auto& m : c["modes"]) cfg.modes.push_back(parse_mode(m.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  try {
    return config_from_json(read_text(path), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json root;
  root["version"] = kConfigVersion;
  json model;
  switch (cfg.source) {
    case ModelSource::canonical: model["source"] = "canonical"; break;
    case ModelSource::file:
      model["source"] = "file";
      model["path"] = cfg.model_path;
      break;
    case ModelSource::random:
      model["source"] = "random";
      model["order"] = cfg.random_order;
      break;
  }
  model["A"] = mat_json(cfg.model.A);
  model["B"] = mat_json(cfg.model.B);
  model["C"] = mat_json(cfg.model.C);
  root["model"] = model;
  root["x0"] = vec_json(cfg.x0);
  root["noise"] = {{"delta", cfg.noise.delta},
                   {"kind", cfg.noise.kind == NoiseKind::uniform ? "uniform" : "gaussian"},
                   {"sigma_frac", cfg.noise.sigma_frac}};
  root["estimator"] = {{"h", cfg.est.h}, {"t", cfg.est.t}};
  const auto& D = cfg.design;
  root["design"] = {{"delta", D.delta},
                    {"y_M", D.y_M},
                    {"u_M", D.u_M},
                    {"epsilon", D.epsilon},
                    {"alpha_M", D.alpha_M},
                    {"horizon", D.horizon},
                    {"margin", D.margin},
                    {"u_margin", D.u_margin},
                    {"max_iters", D.max_iters},
                    {"tol", D.tol},
                    {"lr0_frac", D.lr0_frac},
                    {"grad_step", D.grad_step},
                    {"scenario_rounds", D.scenario_rounds},
                    {"method", method_name(D.method)},
                    {"prediction_model", D.prediction == PredictionModel::nominal ? "nominal" : "estimated"},
                    {"init_length", D.init_length},
                    {"white_amplitude", D.white_amplitude}};
  json modes = json::array();
  for (auto m : cfg.modes) modes.push_back(mode_name(m));
  root["campaign"] = {{"trials", cfg.trials},
                      {"N_schedule", cfg.N_schedule},
                      {"modes", modes},
                      {"seed", cfg.seed},
                      {"workers", cfg.workers},
                      {"max_failure_fraction", cfg.max_failure_fraction}};
  return root.dump(2);
}

}  // namespace vmsid
