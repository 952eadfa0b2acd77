#include "vmsid/lti_core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vmsid/errors.hpp"
#include "vmsid/rng.hpp"

namespace vmsid {

namespace {

int rank_of(const Mat& M, double tol) {
  Eigen::JacobiSVD<Mat> svd(M);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i) r += sv(i) > tol * sv(0);
  return r;
}

void check_columns(const Mat& sig, long first, long last, const char* what) {
  if (first < 0 || last >= sig.cols())
    throw std::out_of_range(std::string(what) + ": needs samples " + std::to_string(first) + ".." +
                            std::to_string(last) + ", have " + std::to_string(sig.cols()));
}

}  // namespace

void StateSpaceModel::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) throw ConfigError("A must be square and non-empty");
  if (B.rows() != A.rows() || B.cols() == 0) throw ConfigError("B must have m rows");
  if (C.cols() != A.rows() || C.rows() == 0) throw ConfigError("C must have m columns");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite()) throw ConfigError("model has non-finite entries");
}

bool StateSpaceModel::is_minimal(double tol) const {
  validate();
  return rank_of(extended_controllability(*this, m()), tol) == m() &&
         rank_of(extended_observability(*this, m()), tol) == m();
}

StateSpaceModel canonical_model() {
  StateSpaceModel m;
  m.A = Mat::Zero(4, 4);
  m.A(0, 1) = m.A(1, 2) = m.A(2, 3) = 1.0;
  m.A.row(3) << -1.23, -2.17, -1.42, -1.21;
  m.B = Mat::Zero(4, 1);
  m.B(3, 0) = 1.0;
  m.C = Mat(1, 4);
  m.C << 0.82, 0.17, -0.28, 0.27;
  return m;
}

Vec canonical_x0() {
  Vec x(4);
  x << 0.0, 0.5, 0.3, 1.0;
  return x;
}

StateSpaceModel random_model(int m, int n, int p, Rng& rng, double radius) {
  if (m < 1 || n < 1 || p < 1) throw ConfigError("random_model: dimensions must be positive");
  for (int attempt = 0; attempt < 100; ++attempt) {
    StateSpaceModel mod{Mat(m, m), Mat(m, p), Mat(n, m)};
    for (int i = 0; i < mod.A.size(); ++i) mod.A.data()[i] = rng.gaussian();
    for (int i = 0; i < mod.B.size(); ++i) mod.B.data()[i] = rng.gaussian();
    for (int i = 0; i < mod.C.size(); ++i) mod.C.data()[i] = rng.gaussian();
    double rho = Eigen::EigenSolver<Mat>(mod.A, false).eigenvalues().cwiseAbs().maxCoeff();
    if (rho < 1e-6) continue;
    mod.A *= radius / rho;
    if (mod.is_minimal(1e-6)) return mod;
  }
  throw NumericError("random_model: no minimal model found");
}

double sample_noise(const NoiseSpec& spec, double bound, Rng& rng) {
  if (bound <= 0.0) return 0.0;
  if (spec.kind == NoiseKind::uniform) return rng.uniform(-bound, bound);
  return rng.truncated_gaussian(spec.sigma_frac * bound, bound);
}

void SignalLog::validate() const {
  if (u.cols() != y.cols()) throw ConfigError("signal log: u and y lengths differ");
  if (!u.allFinite() || !y.allFinite()) throw NumericError("signal log: non-finite values");
}

SignalLog simulate(const StateSpaceModel& model, const Vec& x0, const Mat& U, const Mat& V,
                   const Mat& W, bool keep_state) {
  model.validate();
  const long T = U.cols();
  if (T < 1) throw ConfigError("simulate: empty input sequence");
  if (U.rows() != model.p()) throw ConfigError("simulate: input has wrong dimension");
  if (x0.size() != model.m()) throw ConfigError("simulate: x0 has wrong dimension");
  if (!x0.allFinite()) throw ConfigError("simulate: x0 not finite");
  if (V.rows() != model.m() || V.cols() != T) throw ConfigError("simulate: V has wrong shape");
  if (W.rows() != model.n() || W.cols() != T) throw ConfigError("simulate: W has wrong shape");
  SignalLog log;
  log.u = U;
  log.y.resize(model.n(), T);
  if (keep_state) log.x = Mat(model.m(), T + 1);
  Vec x = x0;
  for (long k = 0; k < T; ++k) {
    if (keep_state) log.x->col(k) = x;
    log.y.col(k) = model.C * x + W.col(k);
    x = model.A * x + model.B * U.col(k) + V.col(k);
    if (!x.allFinite() || !log.y.col(k).allFinite())
      throw NumericError("simulate: non-finite state at sample " + std::to_string(k));
  }
  if (keep_state) log.x->col(T) = x;
  log.v = V;
  log.w = W;
  return log;
}

SignalLog simulate(const StateSpaceModel& model, const Vec& x0, const Mat& U, const NoiseSpec& noise,
                   Rng* v_rng, Rng* w_rng, bool keep_state) {
  model.validate();
  const long T = U.cols();
  Mat V = Mat::Zero(model.m(), T), W = Mat::Zero(model.n(), T);
  // per sample: process noise first, then output noise, matching SimulatedPlant
  for (long k = 0; k < T; ++k) {
    if (w_rng)
      for (int i = 0; i < model.n(); ++i) W(i, k) = sample_noise(noise, noise.w_M, *w_rng);
    if (v_rng)
      for (int i = 0; i < model.m(); ++i) V(i, k) = sample_noise(noise, noise.delta, *v_rng);
  }
  return simulate(model, x0, U, V, W, keep_state);
}

HankelBlock build_hankel(const Mat& signal, long k, int h, int s) {
  if (h < 1 || s < 1) throw std::out_of_range("build_hankel: h and s must be positive");
  check_columns(signal, k, k + h + s - 2, "build_hankel");
  const int d = static_cast<int>(signal.rows());
  HankelBlock H{Mat(h * d, s), k, h, s};
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < s; ++j) H.data.block(i * d, j, d, 1) = signal.col(k + i + j);
  return H;
}

Mat build_L(const Mat& y, const Mat& u, long k, int h, int t) {
  const int n = static_cast<int>(y.rows()), p = static_cast<int>(u.rows());
  const int s = estimator_width(n, p, h, t);
  Mat L(s, s);
  L.topRows(h * n) = build_hankel(y, k, h, s).data;
  L.bottomRows((h + t) * p) = build_hankel(u, k, h + t, s).data;
  return L;
}

Mat target_row(const Mat& y, long k, int h, int t, int s) {
  check_columns(y, k + h + t, k + h + t + s - 1, "target_row");
  return y.middleCols(k + h + t, s);
}

Mat MarkovMatrix::markov(int i) const {
  const int pp = p();
  return G.middleCols((t - 1 - i) * pp, pp);
}

MarkovMatrix markov_true(const StateSpaceModel& model, int t) {
  model.validate();
  if (t < 1) throw ConfigError("markov_true: t must be >= 1");
  const int p = model.p();
  MarkovMatrix M{Mat(model.n(), t * p), t};
  Mat AiB = model.B;
  for (int i = 0; i < t; ++i) {
    M.G.middleCols((t - 1 - i) * p, p) = model.C * AiB;
    AiB = model.A * AiB;
  }
  return M;
}

Mat extended_observability(const StateSpaceModel& model, int h) {
  const int n = model.n();
  Mat O(h * n, model.m());
  Mat CA = model.C;
  for (int i = 0; i < h; ++i) {
    O.middleRows(i * n, n) = CA;
    CA = CA * model.A;
  }
  return O;
}

Mat extended_controllability(const StateSpaceModel& model, int h) {
  const int p = model.p();
  Mat Ob(model.m(), h * p);
  Mat AB = model.B;
  for (int i = h - 1; i >= 0; --i) {
    Ob.middleCols(i * p, p) = AB;
    AB = model.A * AB;
  }
  return Ob;
}

Mat toeplitz_T(const StateSpaceModel& model, int h) {
  const int n = model.n(), p = model.p();
  Mat T = Mat::Zero(h * n, h * p);
  Mat AiB = model.B;
  for (int d = 1; d < h; ++d) {  // block (i, i-d) = C A^{d-1} B
    Mat blk = model.C * AiB;
    for (int i = d; i < h; ++i) T.block(i * n, (i - d) * p, n, p) = blk;
    AiB = model.A * AiB;
  }
  return T;
}

double condition_number(const Mat& M) {
  Eigen::JacobiSVD<Mat> svd(M);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0) return 0.0;
  double lo = sv(sv.size() - 1);
  return lo > 0.0 ? sv(0) / lo : INFINITY;
}

InvertibilityReport check_invertibility(const Mat& M, double cond_limit) {
  if (M.rows() != M.cols()) throw ConfigError("check_invertibility: matrix not square");
  double c = condition_number(M);
  return {std::isfinite(c) && c < cond_limit, c};
}

Mat pinv(const Mat& M) { return M.completeOrthogonalDecomposition().pseudoInverse(); }

}  // namespace vmsid
