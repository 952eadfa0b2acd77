#include "vmsid/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "vmsid/errors.hpp"

namespace vmsid {

namespace fs = std::filesystem;

ExperimentConfig ExperimentConfig::canonical_preset() {
  ExperimentConfig c;
  c.design.prediction = PredictionModel::nominal;
  c.design.init_length = 44;
  return c;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (x0.size() != model.m()) throw ConfigError("experiment: x0 does not match the model order");
  if (trials < 0) throw ConfigError("experiment: trials must be >= 0");
  if (N_schedule.empty()) throw ConfigError("experiment: empty N schedule");
  for (int N : N_schedule)
    if (N < 1) throw ConfigError("experiment: N values must be positive");
  if (modes.empty()) throw ConfigError("experiment: no input mode");
  if (workers < 1) throw ConfigError("experiment: workers must be >= 1");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
    throw ConfigError("experiment: max_failure_fraction must be in [0, 1]");
  EstimatorConfig e = est;
  e.n = model.n();
  e.p = model.p();
  e.validate();
  design.validate();
}

int ExperimentConfig::max_N() const { return *std::max_element(N_schedule.begin(), N_schedule.end()); }

double ErrorCurves::get(int N, InputMode mode, const std::string& stat) const {
  for (const auto& r : rows)
    if (r.N == N && r.mode == mode && r.stat == stat) return r.value;
  return std::numeric_limits<double>::quiet_NaN();
}

const char* mode_name(InputMode mode) { return mode == InputMode::designed ? "designed" : "white_noise"; }

InputMode parse_mode(const std::string& s) {
  if (s == "designed") return InputMode::designed;
  if (s == "white_noise" || s == "white") return InputMode::white_noise;
  throw ConfigError("unknown input mode: " + s);
}

TrialResult run_trial(const ExperimentConfig& cfg, int trial, InputMode mode, IdentificationRun* run_out) {
  TrialResult res;
  res.trial = trial;
  res.mode = mode;
  DesignConfig d = cfg.design;
  d.mode = mode;
  EstimatorConfig est = cfg.est;
  est.n = cfg.model.n();
  est.p = cfg.model.p();
  SimulatedPlant plant(cfg.model, cfg.x0, cfg.noise, Rng(cfg.seed, trial, streams::process_noise),
                       Rng(cfg.seed, trial, streams::output_noise));
  try {
    auto run = run_closed_loop(plant, &cfg.model, cfg.model.m(), est, d, RunLimits{cfg.max_N(), -1},
                               Rng(cfg.seed, trial, streams::input));
    res.empty_events = run.empty_events;
    res.y_violations = run.y_violations;
    res.steps = static_cast<long>(run.iterations.size());
    for (int N : cfg.N_schedule) {
      if (N <= static_cast<int>(run.batches.size())) {
        res.dG[N] = run.batches[N - 1].dG;
        res.J[N] = run.batches[N - 1].J;
      }
    }
    if (!run.failure.empty()) {
      res.failed = true;
      res.failure = run.failure;
    } else if (run.batches.size() < static_cast<size_t>(cfg.max_N())) {
      res.failed = true;
      res.failure = std::to_string(run.skipped_batches) + " batches skipped";
    }
    if (run_out) *run_out = std::move(run);
  } catch (const NumericError& e) {
    res.failed = true;
    res.failure = e.what();
  }
  return res;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  size_t i = static_cast<size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  double f = pos - static_cast<double>(i);
  return v[i] + f * (v[i + 1] - v[i]);
}

std::vector<CurveRow> compute_curves(const std::vector<TrialResult>& trials, const std::vector<int>& N_schedule) {
  std::vector<CurveRow> rows;
  for (InputMode mode : {InputMode::designed, InputMode::white_noise}) {
    for (int N : N_schedule) {
      std::vector<double> err, D;
      for (const auto& t : trials) {
        if (t.mode != mode || t.failed) continue;
        auto g = t.dG.find(N);
        if (g != t.dG.end()) err.push_back(std::sqrt(g->second));
        auto j = t.J.find(N);
        if (j != t.J.end()) D.push_back(j->second / N);
      }
      auto emit = [&](const std::string& prefix, std::vector<double>& v) {
        if (v.empty()) return;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        rows.push_back({N, mode, prefix + "_mean", mean});
        rows.push_back({N, mode, prefix + "_median", quantile(v, 0.5)});
        rows.push_back({N, mode, prefix + "_q1", quantile(v, 0.25)});
        rows.push_back({N, mode, prefix + "_q3", quantile(v, 0.75)});
      };
      emit("err", err);
      emit("D", D);
    }
  }
  return rows;
}

ErrorCurves run_campaign(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<int, InputMode>> jobs;
  for (InputMode mode : cfg.modes)
    for (int i = 0; i < cfg.trials; ++i) jobs.emplace_back(i, mode);
  std::vector<TrialResult> results(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t j; (j = next.fetch_add(1)) < jobs.size();)
      results[j] = run_trial(cfg, jobs[j].first, jobs[j].second);
  };
  int nw = std::min<int>(cfg.workers, std::max<size_t>(1, jobs.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ErrorCurves c;
  c.trials = std::move(results);
  for (const auto& t : c.trials) c.failures += t.failed;
  if (!jobs.empty() && c.failures > cfg.max_failure_fraction * static_cast<double>(jobs.size())) {
    std::string first;
    for (const auto& t : c.trials)
      if (t.failed) {
        first = t.failure;
        break;
      }
    throw NumericError("campaign: " + std::to_string(c.failures) + " of " + std::to_string(jobs.size()) +
                       " trials failed (" + first + ")");
  }
  c.rows = compute_curves(c.trials, cfg.N_schedule);
  return c;
}

ErrorCurves white_noise_baseline(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.modes = {InputMode::white_noise};
  return run_campaign(c);
}

double convergence_slope(const std::vector<double>& N, const std::vector<double>& values) {
  if (N.size() != values.size() || N.size() < 3) throw ConfigError("slope: need at least 3 matching points");
  const size_t k = N.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < k; ++i) {
    if (!(N[i] > 0.0) || !(values[i] > 0.0)) throw NumericError("slope: values must be positive");
    double x = std::log(N[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double den = k * sxx - sx * sx;
  if (den == 0.0) throw ConfigError("slope: N values must differ");
  return (k * sxy - sx * sy) / den;
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, sep)) out.push_back(f);
  return out;
}

}  // namespace

void emit_csv(const ErrorCurves& curves, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto f = open_out(dir / "curves.csv");
  f << "N,mode,stat,value\n";
  for (const auto& r : curves.rows) f << r.N << ',' << mode_name(r.mode) << ',' << r.stat << ',' << num(r.value) << '\n';
  auto g = open_out(dir / "trials.csv");
  g << "trial,N,mode,dG,J\n";
  for (const auto& t : curves.trials)
    for (const auto& [N, dG] : t.dG) {
      auto j = t.J.find(N);
      g << t.trial << ',' << N << ',' << mode_name(t.mode) << ',' << num(dG) << ','
        << num(j == t.J.end() ? std::numeric_limits<double>::quiet_NaN() : j->second) << '\n';
    }
}

ErrorCurves read_csv(const fs::path& dir) {
  ErrorCurves c;
  std::ifstream f(dir / "curves.csv");
  if (!f) throw ConfigError("cannot read " + (dir / "curves.csv").string());
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    auto v = split(line, ',');
    if (v.size() != 4) throw ConfigError("curves.csv: malformed line: " + line);
    c.rows.push_back({std::stoi(v[0]), parse_mode(v[1]), v[2], std::strtod(v[3].c_str(), nullptr)});
  }
  std::ifstream g(dir / "trials.csv");
  if (!g) throw ConfigError("cannot read " + (dir / "trials.csv").string());
  std::getline(g, line);
  while (std::getline(g, line)) {
    auto v = split(line, ',');
    if (v.size() != 5) throw ConfigError("trials.csv: malformed line: " + line);
    int trial = std::stoi(v[0]), N = std::stoi(v[1]);
    InputMode mode = parse_mode(v[2]);
    auto it = std::find_if(c.trials.begin(), c.trials.end(),
                           [&](const TrialResult& t) { return t.trial == trial && t.mode == mode; });
    if (it == c.trials.end()) {
      c.trials.emplace_back();
      it = c.trials.end() - 1;
      it->trial = trial;
      it->mode = mode;
    }
    it->dG[N] = std::strtod(v[3].c_str(), nullptr);
    it->J[N] = std::strtod(v[4].c_str(), nullptr);
  }
  return c;
}

std::string emit_summary(const ErrorCurves& curves, int N_ratio) {
  std::ostringstream os;
  os << "trials: " << curves.trials.size() << ", failures: " << curves.failures << "\n";
  double d = curves.get(N_ratio, InputMode::designed, "err_mean");
  double w = curves.get(N_ratio, InputMode::white_noise, "err_mean");
  os << "N=" << N_ratio << " mean error: designed " << num(d) << ", white noise " << num(w) << "\n";
  os << "error ratio designed/white at N=" << N_ratio << ": " << num(d / w) << "\n";
  for (InputMode mode : {InputMode::designed, InputMode::white_noise}) {
    std::vector<double> Ns, vals;
    std::vector<int> all;
    for (const auto& r : curves.rows)
      if (r.mode == mode && r.stat == "D_median" && r.value > 0.0) {
        Ns.push_back(r.N);
        vals.push_back(r.value);
      }
    if (Ns.size() >= 3)
      os << mode_name(mode) << " D_N median log-log slope: " << num(convergence_slope(Ns, vals)) << "\n";
  }
  os << "PEM baseline: not implemented (third-party comparison method)\n";
  return os.str();
}

void write_run_csv(const IdentificationRun& run, const fs::path& path) {
  auto f = open_out(path);
  f << "iter,u,y,yhat,J,dG,feasible\n";
  for (const auto& it : run.iterations)
    f << it.iter << ',' << num(it.u) << ',' << num(it.y) << ',' << num(it.yhat) << ',' << num(it.J) << ','
      << num(it.dG) << ',' << (it.feasible ? 1 : 0) << '\n';
}

}  // namespace vmsid
