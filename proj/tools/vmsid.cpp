// vmsid: simulate, identify, deviation, design, campaign, report.
// Exit codes: 0 ok, 1 config error, 2 numeric failure, 3 report --check failed.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "vmsid/errors.hpp"
#include "vmsid/io.hpp"

using namespace vmsid;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file (version 1)");
  app->add_option("--set", c.sets, "override, dotted.key=value")->take_all();
  app->add_option("-o,--out", c.out, "output path");
}

ExperimentConfig load(const Common& c) {
  if (c.config.empty()) return config_from_json(R"({"version": 1})", c.sets);
  return load_config(c.config, c.sets);
}

void print(const std::string& s) { std::cout << s << (s.empty() || s.back() == '\n' ? "" : "\n"); }

int cmd_simulate(const Common& c, long steps) {
  auto cfg = load(c);
  if (steps < 1) throw ConfigError("--steps must be positive");
  Rng in(cfg.seed, 0, streams::input);
  Mat U(cfg.model.p(), steps);
  double a = cfg.design.white_amplitude * cfg.design.u_M;
  for (long k = 0; k < U.size(); ++k) U.data()[k] = a > 0 ? in.uniform(-a, a) : 0.0;
  Rng v(cfg.seed, 0, streams::process_noise), w(cfg.seed, 0, streams::output_noise);
  auto log = simulate(cfg.model, cfg.x0, U, cfg.noise, &v, &w);
  if (c.out.empty()) print(signal_to_json(log));
  else write_signal_csv(log, c.out);
  return 0;
}

SignalLog load_signal(const std::string& path, const ExperimentConfig& cfg) {
  if (fs::path(path).extension() == ".json") return signal_from_json(read_text(path));
  return read_signal_csv(path, cfg.model.n(), cfg.model.p());
}

int cmd_identify(const Common& c, const std::string& signal, int N, int order) {
  auto cfg = load(c);
  auto log = load_signal(signal, cfg);
  EstimatorConfig est = cfg.est;
  est.n = static_cast<int>(log.y.rows());
  est.p = static_cast<int>(log.u.rows());
  long avail = log.length() - est.window();
  int maxN = avail < 0 ? 0 : static_cast<int>(avail / est.s()) + 1;
  est.N = N > 0 ? N : maxN;
  if (est.N < 1 || est.N > maxN)
    throw ConfigError("signal holds " + std::to_string(maxN) + " batches, asked for " + std::to_string(est.N));
  BatchReport rep;
  auto G = estimate_markov_batched(log.y, log.u, est, &rep);
  for (const auto& wmsg : rep.warnings) std::cerr << "warning: " << wmsg << "\n";
  std::string text = "{\"batches\": " + std::to_string(rep.used) + ",\n\"markov\": " + markov_to_json(G);
  int m = order > 0 ? order : cfg.model.m();
  if (2 * m <= est.t) text += ",\n\"realization\": " + realization_to_json(ho_kalman(G, m));
  text += "}\n";
  if (c.out.empty()) print(text);
  else write_text(c.out, text);
  return 0;
}

int cmd_deviation(const Common& c, const std::string& signal, long k, const std::string& method) {
  auto cfg = load(c);
  auto log = load_signal(signal, cfg);
  EstimatorConfig est = cfg.est;
  est.n = static_cast<int>(log.y.rows());
  est.p = static_cast<int>(log.u.rows());
  est.k = k;
  Method m = method == "exact" ? Method::exact : method == "relaxed" ? Method::relaxed : Method::automatic;
  if (method != "exact" && method != "relaxed" && method != "automatic")
    throw ConfigError("unknown method " + method);
  auto dev = max_deviation(log.y, log.u, est, cfg.design.delta, m);
  if (c.out.empty()) print(deviation_to_json(dev));
  else write_text(c.out, deviation_to_json(dev));
  return 0;
}

int cmd_design(const Common& c, int batches, const std::string& plant_cmd, const std::string& mode) {
  auto cfg = load(c);
  DesignConfig d = cfg.design;
  d.mode = parse_mode(mode);
  EstimatorConfig est = cfg.est;
  if (batches < 1) batches = cfg.max_N();
  IdentificationRun run;
  Rng input(cfg.seed, 0, streams::input);
  if (plant_cmd.empty()) {
    SimulatedPlant plant(cfg.model, cfg.x0, cfg.noise, Rng(cfg.seed, 0, streams::process_noise),
                         Rng(cfg.seed, 0, streams::output_noise));
    run = run_closed_loop(plant, &cfg.model, cfg.model.m(), est, d, RunLimits{batches, -1}, input);
  } else {
    ProcessPlant plant(plant_cmd, cfg.model.n(), cfg.model.p());
    bool nominal = d.prediction == PredictionModel::nominal;
    run = run_closed_loop(plant, nominal ? &cfg.model : nullptr, cfg.model.m(), est, d, RunLimits{batches, -1},
                          input);
  }
  if (!c.out.empty()) write_run_csv(run, c.out);
  std::printf("steps %zu, batches %zu, empty sets %d, y violations %d, design failures %d\n",
              run.iterations.size(), run.batches.size(), run.empty_events, run.y_violations,
              run.design_failures);
  if (!run.batches.empty())
    std::printf("last batch: J %.6g, dG %.6g\n", run.batches.back().J, run.batches.back().dG);
  if (!run.failure.empty()) throw NumericError(run.failure);
  return 0;
}

int cmd_campaign(const Common& c, int trials, int workers) {
  auto cfg = load(c);
  if (trials >= 0) cfg.trials = trials;
  if (workers > 0) cfg.workers = workers;
  auto curves = run_campaign(cfg);
  fs::path dir = c.out.empty() ? fs::path("campaign_out") : fs::path(c.out);
  emit_csv(curves, dir);
  print(emit_summary(curves, cfg.max_N()));
  std::cout << "wrote " << (dir / "curves.csv").string() << " and " << (dir / "trials.csv").string() << "\n";
  return 0;
}

int cmd_report(const std::string& in, int N, bool check, double ratio_max) {
  auto curves = read_csv(in);
  if (N <= 0)
    for (const auto& r : curves.rows) N = std::max(N, r.N);
  print(emit_summary(curves, N));
  if (!check) return 0;
  double ratio = curves.get(N, InputMode::designed, "err_mean") / curves.get(N, InputMode::white_noise, "err_mean");
  bool ok = std::isfinite(ratio) && ratio < ratio_max;
  std::printf("check: ratio %.4g < %.4g: %s\n", ratio, ratio_max, ok ? "PASS" : "FAIL");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-minimizing subspace identification"};
  app.require_subcommand(1);

  Common c_sim, c_id, c_dev, c_des, c_camp;
  long steps = 200;
  auto* sim = app.add_subcommand("simulate", "simulate the configured plant under white input");
  add_common(sim, c_sim);
  sim->add_option("--steps", steps, "number of samples");

  std::string id_signal;
  int id_N = 0, id_order = 0;
  auto* id = app.add_subcommand("identify", "batched Markov estimate and Ho-Kalman realization from a signal");
  add_common(id, c_id);
  id->add_option("--signal", id_signal, "signal CSV or JSON")->required();
  id->add_option("--batches", id_N, "batch count (default: as many as fit)");
  id->add_option("--order", id_order, "realization order (default: model order)");

  std::string dev_signal, dev_method = "automatic";
  long dev_k = 0;
  auto* dev = app.add_subcommand("deviation", "maximum identification deviation of one window");
  add_common(dev, c_dev);
  dev->add_option("--signal", dev_signal, "signal CSV or JSON")->required();
  dev->add_option("--k", dev_k, "window start");
  dev->add_option("--method", dev_method, "exact | relaxed | automatic");

  int des_batches = 0;
  std::string plant_cmd, des_mode = "designed";
  auto* des = app.add_subcommand("design", "closed-loop identification with designed inputs");
  add_common(des, c_des);
  des->add_option("--batches", des_batches, "batch count (default: largest N in the schedule)");
  des->add_option("--plant-cmd", plant_cmd, "external plant speaking the line protocol");
  des->add_option("--mode", des_mode, "designed | white_noise");

  int camp_trials = -1, camp_workers = 0;
  auto* camp = app.add_subcommand("campaign", "Monte-Carlo campaign, writes curves.csv and trials.csv");
  add_common(camp, c_camp);
  camp->add_option("--trials", camp_trials, "trial count");
  camp->add_option("--workers", camp_workers, "worker threads");

  std::string rep_in;
  int rep_N = 0;
  bool rep_check = false;
  double rep_ratio = 0.6;
  auto* rep = app.add_subcommand("report", "summarize campaign CSVs");
  rep->add_option("--in", rep_in, "campaign output directory")->required();
  rep->add_option("--N", rep_N, "batch count for the ratio (default: largest)");
  rep->add_flag("--check", rep_check, "exit 3 when the error ratio is not below --ratio-max");
  rep->add_option("--ratio-max", rep_ratio, "acceptance threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(c_sim, steps);
    if (*id) return cmd_identify(c_id, id_signal, id_N, id_order);
    if (*dev) return cmd_deviation(c_dev, dev_signal, dev_k, dev_method);
    if (*des) return cmd_design(c_des, des_batches, plant_cmd, des_mode);
    if (*camp) return cmd_campaign(c_camp, camp_trials, camp_workers);
    if (*rep) return cmd_report(rep_in, rep_N, rep_check, rep_ratio);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
