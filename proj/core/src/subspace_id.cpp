#include "vmsid/subspace_id.hpp"

#include <cmath>
#include <string>

#include "vmsid/errors.hpp"

namespace vmsid {

void EstimatorConfig::validate() const {
  if (h < 1 || t < 1) throw ConfigError("estimator: h and t must be >= 1");
  if (n < 1 || p < 1) throw ConfigError("estimator: n and p must be >= 1");
  if (N < 1) throw ConfigError("estimator: N must be >= 1");
  if (k < 0) throw ConfigError("estimator: k must be >= 0");
}

EstimatorConfig EstimatorConfig::defaults(int m, int n, int p) {
  EstimatorConfig c;
  c.h = m;
  c.t = 2 * m + 1;
  c.n = n;
  c.p = p;
  return c;
}

namespace {

void check_data(const Mat& y, const Mat& u, const EstimatorConfig& cfg) {
  cfg.validate();
  if (y.rows() != cfg.n || u.rows() != cfg.p) throw ConfigError("estimator: signal dimensions do not match n, p");
}

}  // namespace

InvertibilityReport check_regressor(const Mat& L, const EstimatorConfig& cfg, double cond_limit) {
  if (cfg.n == 1) return check_invertibility(L, cond_limit);
  const int rows = (cfg.h + cfg.t) * cfg.p;
  auto rep = check_invertibility(L.bottomRows(rows) * L.bottomRows(rows).transpose(), cond_limit * cond_limit);
  rep.condition_number = std::sqrt(rep.condition_number);
  return rep;
}

MarkovMatrix estimate_markov_noise_free(const Mat& y, const Mat& u, const EstimatorConfig& cfg,
                                        double cond_limit) {
  check_data(y, u, cfg);
  const int s = cfg.s();
  Mat L = build_L(y, u, cfg.k, cfg.h, cfg.t);
  auto rep = check_regressor(L, cfg, cond_limit);
  if (!rep.ok) throw EstimationError("L[y,u] is singular", rep.condition_number);
  Mat Y = target_row(y, cfg.k, cfg.h, cfg.t, s);
  // Y L^-1 via the transposed system
  Mat RG = cfg.n == 1 ? Mat(L.transpose().fullPivLu().solve(Y.transpose()).transpose()) : Mat(Y * pinv(L));
  return {RG.rightCols(cfg.r()), cfg.t};
}

Mat batch_regression(const Mat& y, const Mat& u, long k, const EstimatorConfig& cfg) {
  Mat L = build_L(y, u, k, cfg.h, cfg.t);
  return target_row(y, k, cfg.h, cfg.t, cfg.s()) * pinv(L);
}

MarkovMatrix estimate_markov_batched(const Mat& y, const Mat& u, const EstimatorConfig& cfg,
                                     BatchReport* report, double cond_limit) {
  check_data(y, u, cfg);
  const int s = cfg.s();
  BatchReport rep;
  Mat sum = Mat::Zero(cfg.n, s);
  for (int i = 0; i < cfg.N; ++i) {
    long k = cfg.batch_start(i);
    Mat L = build_L(y, u, k, cfg.h, cfg.t);
    auto inv = check_regressor(L, cfg, cond_limit);
    if (!inv.ok) {
      rep.skipped.push_back(i);
      rep.warnings.push_back("batch " + std::to_string(i) + " skipped, condition number " +
                             std::to_string(inv.condition_number));
      continue;
    }
    sum += target_row(y, k, cfg.h, cfg.t, s) * pinv(L);
    ++rep.used;
  }
  if (rep.used == 0) throw EstimationError("all batches degenerate", INFINITY);
  rep.RG_mean = sum / rep.used;
  MarkovMatrix G{rep.RG_mean.rightCols(cfg.r()), cfg.t};
  if (report) *report = std::move(rep);
  return G;
}

Realization ho_kalman(const MarkovMatrix& G, int m, double rank_tol) {
  const int t = G.t, p = G.p(), n = static_cast<int>(G.G.rows());
  if (m < 1) throw ConfigError("ho_kalman: order must be >= 1");
  if (t < 2 * m) throw ConfigError("ho_kalman: need t >= 2m Markov blocks");
  const int rows = t / 2, cols = t - rows;  // H uses blocks 0 .. t-2, the shift 1 .. t-1
  Mat H(rows * n, cols * p), Hs(rows * n, cols * p);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      H.block(i * n, j * p, n, p) = G.markov(i + j);
      if (i + j + 1 < t) Hs.block(i * n, j * p, n, p) = G.markov(i + j + 1);
      else Hs.block(i * n, j * p, n, p).setZero();
    }
  Eigen::JacobiSVD<Mat> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (sv.size() < m || sv(0) <= 0.0 || sv(m - 1) <= rank_tol * sv(0))
    throw RankError("ho_kalman: Hankel rank below model order", sv);
  Vec sq = sv.head(m).cwiseSqrt();
  Mat O = svd.matrixU().leftCols(m) * sq.asDiagonal();                   // observability factor
  Mat Cc = sq.asDiagonal() * svd.matrixV().leftCols(m).transpose();      // controllability factor
  Vec isq = sq.cwiseInverse();
  Mat Opinv = isq.asDiagonal() * svd.matrixU().leftCols(m).transpose();
  Mat Ccpinv = svd.matrixV().leftCols(m) * isq.asDiagonal();
  Realization R;
  R.A_hat = Opinv * Hs * Ccpinv;
  R.B_hat = Cc.leftCols(p);
  R.C_hat = O.topRows(n);
  R.singular_values = sv;
  return R;
}

double identification_error(const Mat& G_hat, const Mat& G_star) {
  if (G_hat.rows() != G_star.rows() || G_hat.cols() != G_star.cols())
    throw ConfigError("identification_error: dimension mismatch");
  return (G_hat - G_star).squaredNorm();
}

}  // namespace vmsid
