// Acceptance suite. usage: vmsid_acceptance <1..10 | all>
// Prints one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vmsid/deviation.hpp"
#include "vmsid/experiments.hpp"
#include "vmsid/input_design.hpp"
#include "vmsid/rng.hpp"
#include "vmsid/subspace_id.hpp"

using namespace vmsid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double brute_force(const Mat& H, double b) {
  const int d = static_cast<int>(H.rows());
  double best = -1e300;
  for (long mask = 0; mask < (1L << d); ++mask) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = (mask >> i & 1) ? b : -b;
    best = std::max(best, x.dot(H * x));
  }
  return best;
}

Outcome noise_free_exactness() {
  Rng rng(2024, 0, streams::model);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    int m = 2 + i % 5;
    int n = 1 + static_cast<int>(rng.next() % 2);
    int p = 1 + static_cast<int>(rng.next() % 2);
    auto mod = random_model(m, n, p, rng);
    auto cfg = EstimatorConfig::defaults(m, n, p);
    Mat U(p, cfg.window());
    for (int j = 0; j < U.size(); ++j) U.data()[j] = rng.gaussian();
    Vec x0(m);
    for (int j = 0; j < m; ++j) x0(j) = rng.gaussian();
    auto log = simulate(mod, x0, U, NoiseSpec{});
    Mat Gs = markov_true(mod, cfg.t).G;
    Mat Gh = estimate_markov_noise_free(log.y, log.u, cfg).G;
    worst = std::max(worst, (Gh - Gs).norm() / Gs.norm());
  }
  return {worst <= 1e-8, fmt("worst relative error %.3e over 50 models (limit 1e-8)", worst)};
}

Outcome ho_kalman_round_trip() {
  auto m = canonical_model();
  auto G = markov_true(m, 9);
  auto R = ho_kalman(G, 4);
  double err = (markov_true(R.model(), 9).G - G.G).cwiseAbs().maxCoeff();
  return {err <= 1e-6, fmt("max abs Markov error %.3e over 9 blocks (limit 1e-6)", err)};
}

Outcome box_qp_oracle() {
  Rng rng(77, 0, streams::model);
  double worst = 1.0;
  int order_violations = 0;
  for (int i = 0; i < 200; ++i) {
    int d = 1 + static_cast<int>(rng.next() % 12);
    int k = 1 + static_cast<int>(rng.next() % d);
    Mat M(k, d);
    for (int j = 0; j < M.size(); ++j) M.data()[j] = rng.gaussian();
    Mat H = M.transpose() * M;
    double b = rng.uniform(0.01, 1.0);
    auto ex = box_qp_exact(H, b);
    auto rl = box_qp_relaxed(H, b);
    double tol = 1e-9 * std::max(1.0, ex.value);
    if (std::abs(ex.value - brute_force(H, b)) > tol) ++order_violations;
    if (rl.value > ex.value + tol) ++order_violations;
    if (rl.relaxed < ex.value - tol) ++order_violations;
    if (ex.value > 0) worst = std::min(worst, rl.value / ex.value);
  }
  bool pass = order_violations == 0 && worst >= 0.95;
  return {pass, fmt("worst rounded/exact %.4f (limit 0.95), ordering violations %d", worst,
                    order_violations)};
}

Outcome analytic_vs_sampled() {
  const double delta = 0.05;
  auto cfg = EstimatorConfig::defaults(4, 1, 1);
  const int W = cfg.window(), s = cfg.s(), r = cfg.r();
  Rng urng(4, 0, streams::input);
  Mat U(1, W);
  for (int k = 0; k < W; ++k) U(0, k) = urng.uniform(-1, 1);
  auto log = simulate(canonical_model(), canonical_x0(), U, NoiseSpec{});
  auto dev = max_deviation(log.y, log.u, cfg, delta, Method::automatic);

  Rng nrng(4, 0, streams::output_noise);
  auto estimate = [&]() {
    Mat y = log.y, u = log.u;
    for (int k = 0; k < W; ++k) {
      y(0, k) += nrng.uniform(-delta, delta);
      u(0, k) += nrng.uniform(-delta, delta);
    }
    Mat L = build_L(y, u, 0, cfg.h, cfg.t);
    Mat Y = target_row(y, 0, cfg.h, cfg.t, s);
    return Mat(L.transpose().partialPivLu().solve(Y.transpose()).transpose().rightCols(r));
  };
  double emp = 0;
  for (int i = 0; i < 100000; ++i) {
    Mat a = estimate(), b = estimate();
    emp = std::max(emp, (a - b).norm());
  }
  bool lower = dev.J >= emp, upper = dev.J <= 1.10 * emp;
  return {lower && upper,
          fmt("analytic J %.4f, sampled max %.4f, ratio %.3f (need 1.00 <= ratio <= 1.10)", dev.J,
              emp, dev.J / emp)};
}

ExperimentConfig preset() {
  auto cfg = ExperimentConfig::canonical_preset();
  cfg.trials = 100;
  return cfg;
}

Outcome error_ratio() {
  auto cfg = preset();
  cfg.N_schedule = {80};
  auto c = run_campaign(cfg);
  double d = c.get(80, InputMode::designed, "err_mean");
  double w = c.get(80, InputMode::white_noise, "err_mean");
  double ratio = d / w;
  return {ratio < 0.6 && c.failures == 0,
          fmt("mean error designed %.4f, white %.4f, ratio %.4f (limit < 0.6), failed trials %d", d, w,
              ratio, c.failures)};
}

Outcome deviation_rate() {
  auto cfg = preset();
  cfg.N_schedule = {10, 20, 40, 80, 160, 320};
  auto c = run_campaign(cfg);
  std::vector<double> N(cfg.N_schedule.begin(), cfg.N_schedule.end()), dd, dw;
  for (int n : cfg.N_schedule) {
    dd.push_back(c.get(n, InputMode::designed, "D_median"));
    dw.push_back(c.get(n, InputMode::white_noise, "D_median"));
  }
  double sd = convergence_slope(N, dd), sw = convergence_slope(N, dw);
  bool pd = sd <= -0.8, pw = sw >= -0.7 && sw <= -0.3;
  return {pd && pw && c.failures == 0,
          fmt("slope designed %.3f (%s, limit <= -0.8), white %.3f (%s, range [-0.7, -0.3])", sd,
              pd ? "ok" : "FAIL", sw, pw ? "ok" : "FAIL")};
}

Outcome gaussian_bound() {
  auto cfg = preset();
  cfg.trials = 500;
  cfg.N_schedule = {40};
  cfg.modes = {InputMode::designed};
  cfg.noise = NoiseSpec::gaussian(cfg.noise.delta);
  auto c = run_campaign(cfg);
  const int N = 40;
  const double delta = cfg.design.delta, aM = cfg.design.alpha_bound(), yM = cfg.design.y_M;
  const double c1 = delta * delta * aM * aM + yM * yM * aM * aM;
  const double c2 = 2.0 * std::sqrt(double(cfg.model.n() + cfg.est.s()));
  std::string detail = fmt("c1 %.3g c2 %.3g;", c1, c2);
  bool pass = c.failures == 0;
  for (int tau = 1; tau <= 3; ++tau) {
    double bound = c1 / N * (c2 + tau) * (c2 + tau);
    int ok = 0, total = 0;
    for (const auto& t : c.trials) {
      if (t.failed) continue;
      ++total;
      ok += t.dG.at(N) <= bound;
    }
    double frac = double(ok) / total, need = 1.0 - 2.0 * std::exp(-tau * tau / 2.0);
    pass = pass && frac >= need;
    detail += fmt(" tau=%d Pr %.3f >= %.3f", tau, frac, need);
  }
  return {pass, detail};
}

Outcome recursive_feasibility() {
  auto cfg = preset();
  auto est = cfg.est;
  int empties = 0, failures = 0;
  long steps = 0, viol = 0;
  double worst_frac = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SimulatedPlant plant(cfg.model, cfg.x0, cfg.noise, Rng(cfg.seed, trial, streams::process_noise),
                         Rng(cfg.seed, trial, streams::output_noise));
    auto run = run_closed_loop(plant, &cfg.model, cfg.model.m(), est, cfg.design,
                               RunLimits{1000, 250}, Rng(cfg.seed, trial, streams::input));
    if (!run.failure.empty() || run.iterations.size() != 250u) ++failures;
    empties += run.empty_events;
    viol += run.y_violations;
    steps += static_cast<long>(run.iterations.size());
    worst_frac = std::max(worst_frac, run.y_violations / double(run.iterations.size()));
  }
  bool pass = empties == 0 && failures == 0 && worst_frac <= 0.02;
  return {pass, fmt("empty sets %d, y > y_M on %ld of %ld steps, worst run %.2f%% (limit 2%%), failed runs %d",
                    empties, viol, steps, 100 * worst_frac, failures)};
}

Outcome convexity() {
  Rng rng(909, 0, streams::model);
  int bad = 0;
  double worst = -1e300;
  auto probe = [&](const std::vector<Scenario>& sc, double lo, double hi) {
    double a = rng.uniform(lo, hi), b = rng.uniform(lo, hi);
    double gap = cost_j0(0.5 * (a + b), sc) - 0.5 * (cost_j0(a, sc) + cost_j0(b, sc));
    worst = std::max(worst, gap);
    if (gap > 1e-9) ++bad;
  };
  // scenario sets from the canonical design problem
  auto m = canonical_model();
  auto est = EstimatorConfig::defaults(4, 1, 1);
  DesignConfig dcfg;
  for (int i = 0; i < 20; ++i) {
    Rng u(909, i, streams::input), v(909, i, streams::process_noise), w(909, i, streams::output_noise);
    Mat U(1, est.window());
    for (int k = 0; k < U.cols(); ++k) U(0, k) = u.uniform(-1, 1);
    auto log = simulate(m, canonical_x0(), U, NoiseSpec::uniform(0.05), &v, &w);
    DesignContext ctx;
    ctx.L = build_L(log.y, log.u, 0, est.h, est.t);
    ctx.Gamma = target_row(log.y, 0, est.h, est.t, est.s()) * pinv(ctx.L);
    ctx.est = est;
    ctx.lo = -10;
    ctx.hi = 10;
    auto res = design_input_step(ctx, dcfg);
    double span = 4.0 * std::max(1.0, std::abs(res.u2));
    for (int j = 0; j < 25; ++j) probe(res.scenarios, -span, span);
  }
  for (int i = 0; i < 500; ++i) {
    std::vector<Scenario> sc;
    int count = 1 + static_cast<int>(rng.next() % 8), len = 1 + static_cast<int>(rng.next() % 20);
    for (int j = 0; j < count; ++j) {
      Scenario s{Vec(len), Vec(len)};
      for (int q = 0; q < len; ++q) {
        s.F(q) = rng.gaussian();
        s.c(q) = rng.gaussian();
      }
      sc.push_back(s);
    }
    probe(sc, -10, 10);
  }
  return {bad == 0, fmt("%d of 1000 probes violate midpoint convexity by more than 1e-9 (worst gap %.2e)",
                        bad, worst)};
}

Outcome variance_equivalence() {
  // scalar plant, h = 1, t = 2: s = 4, r = 2, window of 7 samples
  StateSpaceModel m{Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)};
  EstimatorConfig cfg;
  cfg.h = 1;
  cfg.t = 2;
  const int W = cfg.window(), s = cfg.s(), r = cfg.r();
  const long corner = cfg.h + cfg.t + s - 2;
  const double delta = 0.05;
  Mat U(1, W);
  U << 0.8, -0.6, 1.0, 0.3, -0.9, 0.0, 0.0;
  Vec x0 = Vec::Constant(1, 0.2);
  const int S = 10000;
  Rng rng(10, 0, streams::output_noise);
  Mat Wn(S, W), En(S, W);
  for (int i = 0; i < S; ++i)
    for (int k = 0; k < W; ++k) {
      Wn(i, k) = rng.uniform(-delta, delta);
      En(i, k) = rng.uniform(-delta, delta);
    }
  std::vector<double> grid, J, mu;
  for (int g = 0; g < 21; ++g) {
    double uc = -2.0 + 0.2 * g;
    Mat Ug = U;
    Ug(0, corner) = uc;
    auto log = simulate(m, x0, Ug, NoiseSpec{});
    auto dev = max_deviation(log.y, log.u, cfg, delta, Method::exact);
    std::vector<Mat> Gs;
    Gs.reserve(S);
    for (int i = 0; i < S; ++i) {
      Mat y = log.y + Wn.row(i), u = log.u + En.row(i);
      Mat L = build_L(y, u, 0, cfg.h, cfg.t);
      Mat Y = target_row(y, 0, cfg.h, cfg.t, s);
      Gs.push_back(L.transpose().partialPivLu().solve(Y.transpose()).transpose().rightCols(r));
    }
    grid.push_back(uc);
    J.push_back(dev.J);
    mu.push_back(sample_variance(Gs));
  }
  auto argmin = [](const std::vector<double>& v) {
    return static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  };
  int aj = argmin(J), am = argmin(mu);
  return {aj == am, fmt("argmin J at u = %.2f (J %.4f), argmin mu at u = %.2f (mu %.4g)", grid[aj], J[aj],
                        grid[am], mu[am])};
}

struct Criterion {
  const char* name;
  double limit_s;  // 0 means no runtime limit
  std::function<Outcome()> run;
};

const std::map<int, Criterion>& criteria() {
  static const std::map<int, Criterion> c{
      {1, {"noise-free exactness", 10, noise_free_exactness}},
      {2, {"Ho-Kalman round trip", 1, ho_kalman_round_trip}},
      {3, {"box-QP oracle equivalence", 60, box_qp_oracle}},
      {4, {"analytic vs sampled deviation", 300, analytic_vs_sampled}},
      {5, {"error ratio at N=80", 600, error_ratio}},
      {6, {"deviation convergence rate", 900, deviation_rate}},
      {7, {"Gaussian error bound", 300, gaussian_bound}},
      {8, {"recursive feasibility", 600, recursive_feasibility}},
      {9, {"J0 midpoint convexity", 0, convexity}},
      {10, {"J/mu argmin agreement", 0, variance_equivalence}},
  };
  return c;
}

bool run_one(int id) {
  const auto& c = criteria().at(id);
  auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = c.run();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = c.limit_s <= 0 || secs < c.limit_s;
  bool pass = out.pass && in_time;
  std::string limit = c.limit_s > 0 ? fmt(" (limit %.0f s)", c.limit_s) : "";
  std::printf("criterion %d [%s]: %s | %s | %.2f s%s%s\n", id, c.name, pass ? "PASS" : "FAIL",
              out.detail.c_str(), secs, limit.c_str(), in_time ? "" : " TIME LIMIT EXCEEDED");
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::string which = argc > 1 ? argv[1] : "all";
  bool ok = true;
  if (which == "all") {
    for (const auto& [id, c] : criteria()) ok = run_one(id) && ok;
  } else {
    int id = std::atoi(which.c_str());
    if (!criteria().count(id)) {
      std::fprintf(stderr, "unknown criterion %s\n", which.c_str());
      return 2;
    }
    ok = run_one(id);
  }
  return ok ? 0 : 1;
}
