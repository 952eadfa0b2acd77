#include <algorithm>
#include <cmath>
#include <limits>

#include "vmsid/errors.hpp"
#include "vmsid/input_design.hpp"

namespace vmsid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double scalar_of(const Vec& v) { return v.size() == 1 ? v(0) : v.cwiseAbs().maxCoeff(); }

}  // namespace

IdentificationRun run_closed_loop(Plant& plant, const StateSpaceModel* truth, int order,
                                  const EstimatorConfig& est_in, const DesignConfig& cfg,
                                  const RunLimits& limits, Rng input_rng) {
  cfg.validate();
  EstimatorConfig est = est_in;
  est.n = plant.n();
  est.p = plant.p();
  est.validate();
  if (limits.batches < 1) throw ConfigError("closed loop: need at least one batch");
  if (cfg.prediction == PredictionModel::nominal && !truth)
    throw ConfigError("closed loop: nominal prediction needs the true model");
  if (est.p != 1 && cfg.mode == InputMode::designed)
    throw ConfigError("closed loop: input design supports single-input plants only");

  const int n = est.n, p = est.p, r = est.r(), s = est.s(), W = est.window(), h = est.h;
  const long k0 = est.k;
  long T = k0 + static_cast<long>(s) * (limits.batches - 1) + W;
  if (limits.max_steps > 0) T = std::min(T, limits.max_steps);
  const long init_len = cfg.init_length >= 0 ? cfg.init_length : s + 1;

  Mat G_true;
  if (truth) G_true = markov_true(*truth, est.t).G;

  IdentificationRun run;
  Mat y = Mat::Zero(n, T), u = Mat::Zero(p, T);
  Mat sumRG = Mat::Zero(n, s);
  int nb = 0;
  double lastJ = kNaN, lastdG = kNaN;

  SafetyFilter filter;
  bool filter_ok = false;
  auto rebuild = [&](const StateSpaceModel& mdl) {
    try {
      filter = SafetyFilter(mdl, h, cfg);
      filter_ok = true;
    } catch (const NumericError&) {
      filter_ok = false;
    }
  };
  if (cfg.prediction == PredictionModel::nominal && p == 1) rebuild(*truth);

  auto white = [&](double lo, double hi) {
    double a = cfg.white_amplitude * cfg.u_M;
    double v = a > 0.0 ? input_rng.uniform(-a, a) : 0.0;
    return std::clamp(v, lo, hi);
  };

  double yhat_pending = kNaN;
  try {
    for (long tau = 0; tau < T; ++tau) {
      Vec yt = plant.measure();
      if (yt.size() != n) throw NumericError("closed loop: plant returned the wrong output size");
      y.col(tau) = yt;
      double ymag = yt.cwiseAbs().maxCoeff();
      run.y_max = std::max(run.y_max, ymag);
      if (ymag > cfg.y_M) ++run.y_violations;

      // batch update
      long first_end = k0 + W - 1;
      if (tau >= first_end && (tau - first_end) % s == 0) {
        long kb = tau - (W - 1);
        Mat L = build_L(y, u, kb, h, est.t);
        auto inv = check_regressor(L, est);
        if (!inv.ok) {
          ++run.skipped_batches;
        } else {
          Mat Li = pinv(L);
          sumRG += target_row(y, kb, h, est.t, s) * Li;
          ++nb;
          Mat Gamma = sumRG / nb;
          MarkovMatrix Gh{Gamma.rightCols(r), est.t};
          AlphaMatrix alpha;
          alpha.alpha = Li;
          alpha.r = r;
          alpha.s = s;
          alpha.condition_number = inv.condition_number;
          Method m = cfg.method == Method::exact ? Method::automatic : cfg.method;
          auto dev = max_deviation(alpha, Gamma, est, cfg.delta, m, 0);
          BatchRecord br;
          br.N = nb;
          br.J = dev.J;
          br.D = dev.J / nb;
          br.dG = truth ? identification_error(Gh.G, G_true) : kNaN;
          br.G = Gh;
          run.batches.push_back(br);
          lastJ = br.J;
          lastdG = br.dG;
          run.G_hat = Gh;
          if (order > 0 && 2 * order <= est.t) {
            try {
              run.realization = ho_kalman(Gh, order);
              run.has_realization = true;
              if (cfg.prediction == PredictionModel::estimated && p == 1)
                rebuild(run.realization.model());
            } catch (const RankError&) {
            }
          }
        }
        if (static_cast<int>(run.batches.size()) + run.skipped_batches >= limits.batches) {
          // the last batch is in; do not apply another input
          IterationRecord rec;
          rec.iter = tau;
          rec.y = scalar_of(yt);
          rec.yhat = yhat_pending;
          rec.J = lastJ;
          rec.dG = lastdG;
          run.iterations.push_back(rec);
          break;
        }
      }

      // choose the input
      IterationRecord rec;
      rec.iter = tau;
      rec.y = scalar_of(yt);
      rec.yhat = yhat_pending;
      Vec ut = Vec::Zero(p);
      Vec xh;
      bool have_state = false;
      if (tau < h) {
        // no state estimate yet: hold the input at zero and keep the stream aligned
        for (int i = 0; i < p; ++i) white(0.0, 0.0);
      } else if (!filter_ok) {
        for (int i = 0; i < p; ++i) ut(i) = white(-cfg.u_M, cfg.u_M);
      } else {
        xh = filter.estimate_state(y, u, tau);
        have_state = true;
        auto iv = filter.feasible_interval(xh);
        if (iv.empty) {
          ++run.empty_events;
          rec.feasible = false;
          ut(0) = filter.fallback_input(xh);
        } else if (cfg.mode == InputMode::white_noise || tau < init_len || nb == 0 ||
                   tau < W - 2) {
          ut(0) = white(iv.lo, iv.hi);
        } else {
          DesignContext ctx;
          long kd = tau - (W - 2);
          u(0, tau) = 0.0;
          ctx.L = build_L(y, u, kd, h, est.t);
          ctx.Gamma = sumRG / nb;
          ctx.est = est;
          ctx.est.k = kd;
          ctx.lo = iv.lo;
          ctx.hi = iv.hi;
          try {
            auto step = design_input_step(ctx, cfg);
            ut(0) = step.u;
            rec.designed = true;
            rec.alpha_ok = step.alpha_tilde <= cfg.alpha_bound();
          } catch (const NumericError&) {
            ++run.design_failures;
            ut(0) = white(iv.lo, iv.hi);
          }
        }
      }
      yhat_pending = have_state ? filter.predict_next_output(xh, ut(0)) : kNaN;
      u.col(tau) = ut;
      plant.apply(ut);
      rec.u = scalar_of(ut);
      rec.J = lastJ;
      rec.dG = lastdG;
      run.iterations.push_back(rec);
    }
    if (nb == 0) run.failure = "no usable batch: every data matrix was singular";
  } catch (const NumericError& e) {
    run.failure = e.what();
  }
  return run;
}

}  // namespace vmsid
