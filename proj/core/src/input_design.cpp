#include "vmsid/input_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vmsid/errors.hpp"

namespace vmsid {

double DesignConfig::alpha_bound() const {
  if (alpha_M > 0.0) return alpha_M;
  if (delta <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(epsilon / delta);
}

void DesignConfig::validate() const {
  if (!(delta >= 0.0)) throw ConfigError("design: delta must be >= 0");
  if (!(y_M > 0.0) || !(u_M > 0.0)) throw ConfigError("design: y_M and u_M must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("design: epsilon must be positive");
  if (!(margin > 0.0 && margin <= 1.0)) throw ConfigError("design: margin must be in (0, 1]");
  if (!(u_margin > 0.0 && u_margin <= 1.0)) throw ConfigError("design: u_margin must be in (0, 1]");
  if (horizon < 1) throw ConfigError("design: horizon must be >= 1");
  if (max_iters < 1 || !(tol > 0.0) || !(grad_step > 0.0) || !(lr0_frac > 0.0))
    throw ConfigError("design: descent settings must be positive");
  if (scenario_rounds < 1) throw ConfigError("design: scenario_rounds must be >= 1");
  if (!(white_amplitude >= 0.0)) throw ConfigError("design: white_amplitude must be >= 0");
  if (alpha_M < 0.0) throw ConfigError("design: alpha_M must be >= 0");
  double a = alpha_bound();
  if (delta > 0.0 && delta * a * a > epsilon * (1.0 + 1e-12))
    throw ConfigError("design: delta * alpha_M^2 must not exceed epsilon");
}

// ---------------------------------------------------------------- bordered inverse

BorderedPartition BorderedPartition::from_matrix(const Mat& L, double cond_limit) {
  const int s = static_cast<int>(L.rows());
  if (s < 2 || L.cols() != s) throw ConfigError("bordered partition: need a square matrix of size >= 2");
  BorderedPartition bp;
  Mat Y = L.topLeftCorner(s - 1, s - 1);
  Eigen::PartialPivLU<Mat> lu(Y);
  double rc = lu.rcond();
  if (!(rc > 1.0 / cond_limit)) throw EstimationError("bordered partition: leading block is singular", 1.0 / rc);
  bp.Y_inv = lu.inverse();
  bp.y = L.col(s - 1).head(s - 1);
  bp.u0 = L.row(s - 1).head(s - 1).transpose();
  bp.u = L(s - 1, s - 1);
  bp.y1 = bp.Y_inv * bp.y;
  bp.sigma = bp.u0.dot(bp.y1);
  bp.u2 = 1.0 / (bp.u - bp.sigma);
  bp.a.resize(s);
  bp.a << -bp.y1, 1.0;
  bp.b.resize(s);
  bp.b << -(bp.Y_inv.transpose() * bp.u0), 1.0;
  return bp;
}

double BorderedPartition::u2_of(double u_val) const { return 1.0 / (u_val - sigma); }

Mat BorderedPartition::alpha0() const {
  const int s = static_cast<int>(a.size());
  Mat a0 = Mat::Zero(s, s);
  a0.topLeftCorner(s - 1, s - 1) = Y_inv;
  return a0;
}

AlphaMatrix bordered_inverse_u2(const BorderedPartition& part, double u2, int r) {
  AlphaMatrix A;
  A.alpha = part.alpha0();
  A.alpha.noalias() += u2 * part.a * part.b.transpose();
  A.s = static_cast<int>(part.a.size());
  A.r = r;
  return A;
}

AlphaMatrix bordered_inverse_update(const BorderedPartition& part, double u_new, int r, double tol) {
  double schur = u_new - part.sigma;
  if (std::abs(schur) <= tol * std::max(1.0, std::abs(part.sigma)))
    throw NumericError("bordered inverse: Schur complement vanishes");
  return bordered_inverse_u2(part, 1.0 / schur, r);
}

// ---------------------------------------------------------------- cost and descent

double cost_j0(double u2, const std::vector<Scenario>& scenarios) {
  double worst = 0.0;
  for (const auto& sc : scenarios) worst = std::max(worst, (sc.F * u2 + sc.c).squaredNorm());
  return worst;
}

double fd_gradient(double u2, const std::vector<Scenario>& scenarios, double step) {
  return (cost_j0(u2 + step, scenarios) - cost_j0(u2 - step, scenarios)) / (2.0 * step);
}

Scenario make_scenario(const BorderedPartition& part, const Mat& Gamma, const EstimatorConfig& cfg,
                       const Vec& w_star, const Vec& p_star) {
  const int n = cfg.n, r = cfg.r(), s = cfg.s();
  if (part.a.size() != s) throw ConfigError("scenario: partition does not match the estimator sizes");
  const Vec bS = part.b.tail(r);
  const Mat a0S = part.alpha0().rightCols(r);  // s x r
  Mat P = j2_perturbation(p_star, cfg);
  Vec GPa = Gamma * (P * part.a);       // n
  Mat GPa0S = Gamma * (P * a0S);        // n x r
  const double wa = w_star.dot(part.a);
  Vec cw = a0S.transpose() * w_star;    // r
  Scenario sc{Vec(2 * n * r), Vec(2 * n * r)};
  for (int i = 0; i < n; ++i) {
    sc.F.segment(i * r, r) = wa * bS;
    sc.c.segment(i * r, r) = cw;
  }
  Mat Fp = GPa * bS.transpose();        // n x r
  sc.F.tail(n * r) = Eigen::Map<const Vec>(Fp.data(), n * r);
  sc.c.tail(n * r) = Eigen::Map<const Vec>(GPa0S.data(), n * r);
  return sc;
}

U2Domain U2Domain::from_interval(double lo, double hi, double sigma) {
  if (lo > hi) throw ConfigError("u2 domain: empty interval");
  const double inf = std::numeric_limits<double>::infinity();
  U2Domain d;
  if (sigma < lo || sigma > hi) {
    double a = 1.0 / (hi - sigma), b = 1.0 / (lo - sigma);
    d.pieces.push_back({std::min(a, b), std::max(a, b)});
  } else {
    if (lo < sigma) d.pieces.push_back({-inf, 1.0 / (lo - sigma)});
    if (hi > sigma) d.pieces.push_back({1.0 / (hi - sigma), inf});
  }
  return d;
}

double descend_u2(double u2_init, const std::vector<Scenario>& scenarios, const DesignConfig& cfg,
                  int* iterations) {
  const double lam0 = cfg.lr0_frac * (u2_init != 0.0 ? std::abs(u2_init) : 1.0);
  double u = u2_init, J = cost_j0(u, scenarios);
  double best = u, bestJ = J;
  int it = 0;
  for (int i = 1; i <= cfg.max_iters; ++i) {
    it = i;
    double g = fd_gradient(u, scenarios, cfg.grad_step * std::max(1.0, std::abs(u)));
    if (g == 0.0 || !std::isfinite(g)) break;
    double un = u - (lam0 / i) * (g > 0 ? 1.0 : -1.0);
    double Jn = cost_j0(un, scenarios);
    double rel = std::abs(Jn - J) / std::max(J, 1e-300);
    if (Jn < bestJ) {
      bestJ = Jn;
      best = un;
    }
    u = un;
    J = Jn;
    if (rel < cfg.tol) break;
  }
  if (iterations) *iterations = it;
  return best;
}

namespace {

// Minimizer of the convex cost over [lo, hi] near `start`: expand a bracket in
// the descending direction, then golden-section search.
double minimize_on_piece(double lo, double hi, double start, const std::vector<Scenario>& sc) {
  auto J = [&](double x) { return cost_j0(x, sc); };
  double x = std::clamp(start, lo, hi);
  double step = 0.1 * std::max(std::abs(x), 1e-6);
  double left = std::max(lo, x - step), right = std::min(hi, x + step);
  double jx = J(x);
  double dir = J(right) < jx ? 1.0 : (J(left) < jx ? -1.0 : 0.0);
  double a = left, b = right;
  if (dir != 0.0) {
    double prev = x, cur = x, jcur = jx;
    for (int k = 0; k < 200; ++k) {
      double nxt = std::clamp(cur + dir * step, lo, hi);
      double jn = J(nxt);
      if (jn > jcur || nxt == cur) {
        a = std::min(prev, nxt);
        b = std::max(prev, nxt);
        break;
      }
      prev = cur;
      cur = nxt;
      jcur = jn;
      step *= 2.0;
      a = std::min(prev, cur);
      b = std::max(prev, cur);
    }
  }
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double jc = J(c), jd = J(d);
  for (int k = 0; k < 200 && b - a > 1e-12 * std::max(1.0, std::abs(a) + std::abs(b)); ++k) {
    if (jc <= jd) {
      b = d;
      d = c;
      jd = jc;
      c = b - g * (b - a);
      jc = J(c);
    } else {
      a = c;
      c = d;
      jc = jd;
      d = a + g * (b - a);
      jd = J(d);
    }
  }
  double best = jc <= jd ? c : d;
  return J(best) <= jx ? best : x;
}

// best point of the domain for the descent result u2
double project_u2(const U2Domain& dom, double u2, const std::vector<Scenario>& sc, bool* moved) {
  double best = u2, bestJ = std::numeric_limits<double>::infinity();
  bool inside = false;
  for (const auto& p : dom.pieces) {
    inside = inside || (u2 >= p.lo && u2 <= p.hi);
    double c = minimize_on_piece(p.lo, p.hi, u2, sc);
    double J = cost_j0(c, sc);
    if (J < bestJ) {
      bestJ = J;
      best = c;
    }
  }
  if (moved) *moved = !inside;
  return best;
}

}  // namespace

DesignStepResult design_input_step(const DesignContext& ctx, const DesignConfig& cfg) {
  const auto& est = ctx.est;
  const int r = est.r();
  auto part = BorderedPartition::from_matrix(ctx.L);
  auto dom = U2Domain::from_interval(ctx.lo, ctx.hi, part.sigma);
  if (dom.pieces.empty()) throw DesignError("design: feasible interval is the singular point");
  DesignStepResult res;
  res.sigma = part.sigma;
  // start where alpha is smallest: the feasible point farthest from sigma
  double u_ref = std::abs(ctx.lo - part.sigma) >= std::abs(ctx.hi - part.sigma) ? ctx.lo : ctx.hi;
  double u2 = part.u2_of(u_ref);
  Method m = cfg.method == Method::exact ? Method::automatic : cfg.method;
  for (int round = 0; round < cfg.scenario_rounds; ++round) {
    auto alpha = bordered_inverse_u2(part, u2, r);
    auto dev = max_deviation(alpha, ctx.Gamma, est, cfg.delta, m, 0);
    Scenario sc = make_scenario(part, ctx.Gamma, est, dev.w_star, dev.p_star);
    res.scenarios.push_back(sc);
    res.scenarios.push_back({-sc.F, -sc.c});
    double start = u2;
    if (round == 0) {
      double ff = sc.F.squaredNorm();
      if (ff > 0.0) start = -sc.F.dot(sc.c) / ff;
    }
    int iters = 0;
    double opt = descend_u2(start, res.scenarios, cfg, &iters);
    res.iterations += iters;
    double next = project_u2(dom, opt, res.scenarios, &res.projected);
    res.rounds = round + 1;
    bool done = std::abs(next - u2) <= 1e-9 * std::max(1.0, std::abs(u2));
    u2 = next;
    if (done) break;
  }
  res.u2 = u2;
  res.u = std::clamp(part.u_of(u2), ctx.lo, ctx.hi);
  res.J0 = cost_j0(u2, res.scenarios);
  res.alpha_tilde = alpha_tilde(bordered_inverse_u2(part, u2, r).alpha, cfg.delta);
  return res;
}

// ---------------------------------------------------------------- prediction and safety

double alpha_tilde(const Mat& alpha, double delta) {
  double na = alpha.cwiseAbs().rowwise().sum().maxCoeff();
  double nd = delta * static_cast<double>(alpha.cols());
  double den = 1.0 - na * nd;
  return den > 0.0 ? na / den : std::numeric_limits<double>::infinity();
}

Mat predict_output(const StateSpaceModel& model, const MarkovMatrix* G_hat, const Mat& Y_window,
                   const Mat& U_window, const Mat& U_next) {
  model.validate();
  const int h = static_cast<int>(Y_window.cols()), n = model.n(), p = model.p(), m = model.m();
  if (U_window.cols() != h || Y_window.rows() != n || U_window.rows() != p || U_next.rows() != p)
    throw ConfigError("predict_output: window shapes do not match the model");
  Mat Oc = extended_observability(model, h);
  Mat Ocp = pinv(Oc);
  Mat Ah = Mat::Identity(m, m);
  for (int i = 0; i < h; ++i) Ah = Ah * model.A;
  // a rank-deficient O_c only matters if the unobserved part survives h steps
  Mat leak = Ah * (Mat::Identity(m, m) - Ocp * Oc);
  if (leak.cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, Ah.cwiseAbs().maxCoeff()))
    throw NumericError("predict_output: observability matrix is rank deficient");
  Eigen::Map<const Vec> Yv(Y_window.data(), n * h);
  Eigen::Map<const Vec> Uv(U_window.data(), p * h);
  Vec xk = Ocp * (Yv - toeplitz_T(model, h) * Uv);
  Vec x = Ah * xk + extended_controllability(model, h) * Uv;
  const int q = static_cast<int>(U_next.cols());
  auto markov = [&](int l) -> Mat {
    if (G_hat && l < G_hat->t) return G_hat->markov(l);
    Mat Al = Mat::Identity(m, m);
    for (int i = 0; i < l; ++i) Al = Al * model.A;
    return model.C * Al * model.B;
  };
  std::vector<Mat> M;
  for (int l = 0; l < q; ++l) M.push_back(markov(l));
  Mat Y(n, q);
  Vec free = x;
  for (int j = 0; j < q; ++j) {
    Vec yj = model.C * free;
    for (int i = 0; i < j; ++i) yj += M[j - 1 - i] * U_next.col(i);
    Y.col(j) = yj;
    free = model.A * free;
  }
  return Y;
}

SafetyFilter::SafetyFilter(const StateSpaceModel& model, int h, const DesignConfig& cfg)
    : model_(model), cfg_(cfg), h_(h) {
  model.validate();
  if (model.p() != 1) throw ConfigError("safety filter: single-input plants only");
  Oc_pinv_ = pinv(extended_observability(model, h));
  T_ = toeplitz_T(model, h);
  const int H = cfg.horizon, m = model.m();
  Mat AH = Mat::Identity(m, m);
  for (int i = 0; i < H; ++i) AH = AH * model.A;
  K_ = pinv(extended_controllability(model, H)) * AH;
  ready_ = true;
}

Vec SafetyFilter::estimate_state(const Mat& y, const Mat& u, long tau) const {
  const long kp = tau - h_ + 1;
  const int n = model_.n();
  if (kp < 0) throw ConfigError("safety filter: not enough samples for the state estimate");
  Vec Yv(n * h_), Uv = Vec::Zero(h_);
  for (int i = 0; i < h_; ++i) {
    Yv.segment(i * n, n) = y.col(kp + i);
    if (i + 1 < h_) Uv(i) = u(0, kp + i);
  }
  Vec x = Oc_pinv_ * (Yv - T_ * Uv);
  for (int j = 0; j + 1 < h_; ++j) x = model_.A * x + model_.B.col(0) * u(0, kp + j);
  return x;
}

Vec SafetyFilter::continuation(const Vec& x_next) const { return -(K_ * x_next); }

double SafetyFilter::fallback_input(const Vec& x_hat) const {
  return std::clamp(-(K_.row(0).dot(x_hat)), -cfg_.u_M, cfg_.u_M);
}

Vec SafetyFilter::predict_next_state(const Vec& x_hat, double u) const {
  return model_.A * x_hat + model_.B.col(0) * u;
}

double SafetyFilter::predict_next_output(const Vec& x_hat, double u) const {
  return (model_.C * predict_next_state(x_hat, u))(0);
}

SafetyFilter::Interval SafetyFilter::feasible_interval(const Vec& x_hat) const {
  const int H = cfg_.horizon, n = model_.n();
  // stacked [continuation inputs; outputs], affine in the corner input
  auto traj = [&](double u) {
    Vec out(H + (H + 1) * n);
    Vec x = predict_next_state(x_hat, u);
    Vec Uc = continuation(x);
    out.head(H) = Uc;
    out.segment(H, n) = model_.C * x;
    for (int j = 0; j < H; ++j) {
      x = model_.A * x + model_.B.col(0) * Uc(j);
      out.segment(H + (j + 1) * n, n) = model_.C * x;
    }
    return out;
  };
  Vec c = traj(0.0), d = traj(1.0) - c;
  Interval iv;
  double lo = -cfg_.u_M, hi = cfg_.u_M;
  for (int i = 0; i < c.size(); ++i) {
    double bound = i < H ? cfg_.u_margin * cfg_.u_M : cfg_.margin * cfg_.y_M;
    if (std::abs(d(i)) < 1e-12) {
      if (std::abs(c(i)) > bound) return iv;
      continue;
    }
    double a = (-bound - c(i)) / d(i), b = (bound - c(i)) / d(i);
    lo = std::max(lo, std::min(a, b));
    hi = std::min(hi, std::max(a, b));
  }
  if (lo > hi) return iv;
  iv.empty = false;
  iv.lo = lo;
  iv.hi = hi;
  return iv;
}

FeasibilityReport feasible_set_check(const Vec& u_seq, const StateSpaceModel& model, const Vec& x_hat,
                                     const DesignConfig& cfg, const AlphaMatrix* alpha, int s) {
  FeasibilityReport rep;
  if (u_seq.size() < 1) throw ConfigError("feasible_set_check: empty candidate");
  if (model.p() != 1) throw ConfigError("feasible_set_check: single-input plants only");
  Vec x = x_hat;
  double ymax = 0.0, umax = 0.0, cmax = 0.0;
  for (int j = 0; j < u_seq.size(); ++j) {
    x = model.A * x + model.B.col(0) * u_seq(j);
    ymax = std::max(ymax, (model.C * x).cwiseAbs().maxCoeff());
    umax = std::max(umax, std::abs(u_seq(j)));
    if (j > 0) cmax = std::max(cmax, std::abs(u_seq(j)));
  }
  rep.y_margin = cfg.margin * cfg.y_M - ymax;
  rep.u_margin = cfg.u_M - umax;
  const double tol = 1e-9;
  if (std::abs(u_seq(0)) > cfg.u_M * (1 + tol)) rep.violated.push_back("input");
  if (cmax > cfg.u_margin * cfg.u_M * (1 + tol)) rep.violated.push_back("continuation");
  if (rep.y_margin < -tol * cfg.y_M) rep.violated.push_back("output");
  rep.feasible = rep.violated.empty();
  if (alpha) {
    (void)s;
    rep.alpha_tilde = alpha_tilde(alpha->alpha, cfg.delta);
    rep.alpha_ok = rep.alpha_tilde <= cfg.alpha_bound();
    rep.epsilon_ok = cfg.delta * rep.alpha_tilde * rep.alpha_tilde <= cfg.epsilon;
    if (!rep.alpha_ok) rep.violated.push_back("alpha (soft)");
    if (!rep.epsilon_ok) rep.violated.push_back("epsilon (soft)");
  }
  return rep;
}

}  // namespace vmsid
