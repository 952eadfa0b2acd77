#include "vmsid/deviation.hpp"

#include <cmath>

#include "vmsid/errors.hpp"

namespace vmsid {

AlphaMatrix alpha_from_L(const Mat& L, int r, double cond_limit) {
  if (L.rows() != L.cols()) throw ConfigError("alpha: L must be square");
  if (r < 0 || r > L.rows()) throw ConfigError("alpha: r out of range");
  auto rep = check_invertibility(L, cond_limit);
  if (!rep.ok) throw EstimationError("alpha: L is singular", rep.condition_number);
  AlphaMatrix a;
  a.alpha = L.fullPivLu().inverse();
  a.r = r;
  a.s = static_cast<int>(L.rows());
  a.condition_number = rep.condition_number;
  return a;
}

AlphaMatrix alpha_matrix(const Mat& y_star, const Mat& u_star, const EstimatorConfig& cfg,
                         double cond_limit) {
  return alpha_from_L(build_L(y_star, u_star, cfg.k, cfg.h, cfg.t), cfg.r(), cond_limit);
}

Mat j1_hessian(const AlphaMatrix& alpha) {
  Mat aS = alpha.selected();
  return aS * aS.transpose();
}

BoxQPResult solve_j1_exact(const Mat& H, double delta) { return box_qp_exact(H, 2.0 * delta); }

BoxQPResult solve_j1_relaxed(const Mat& H, double delta) { return box_qp_relaxed(H, 2.0 * delta); }

int j2_dim(const EstimatorConfig& cfg) {
  const int s = cfg.s();
  return (cfg.h + s - 1) * cfg.n + (cfg.h + cfg.t + s - 1) * cfg.p;
}

Mat j2_map(const AlphaMatrix& alpha, const Mat& Gamma, const EstimatorConfig& cfg) {
  const int n = cfg.n, p = cfg.p, h = cfg.h, t = cfg.t, s = cfg.s(), r = cfg.r();
  if (Gamma.rows() != n || Gamma.cols() != s) throw ConfigError("j2_map: Gamma must be n x s");
  if (alpha.s != s || alpha.r != r) throw ConfigError("j2_map: alpha does not match the estimator sizes");
  const Mat aS = alpha.selected();  // s x r
  const int nw = (h + s - 1) * n;
  Mat M = Mat::Zero(n * r, j2_dim(cfg));
  // column of variable (q, c) in a block with `rows` block rows starting at row0
  auto fill = [&](int col, int q, int c, int rows, int row0, int dim) {
    Eigen::Map<Mat> out(M.col(col).data(), n, r);
    for (int a = 0; a < rows; ++a) {
      int b = q - a;
      if (b < 0 || b >= s) continue;
      out.noalias() += Gamma.col(row0 + a * dim + c) * aS.row(b);
    }
  };
  for (int q = 0; q < h + s - 1; ++q)
    for (int c = 0; c < n; ++c) fill(q * n + c, q, c, h, 0, n);
  for (int q = 0; q < h + t + s - 1; ++q)
    for (int c = 0; c < p; ++c) fill(nw + q * p + c, q, c, h + t, h * n, p);
  return M;
}

Mat j2_perturbation(const Vec& pv, const EstimatorConfig& cfg) {
  const int n = cfg.n, p = cfg.p, h = cfg.h, t = cfg.t, s = cfg.s();
  if (pv.size() != j2_dim(cfg)) throw ConfigError("j2_perturbation: wrong vector length");
  const int nw = (h + s - 1) * n;
  Mat P(s, s);
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < s; ++b)
      for (int c = 0; c < n; ++c) P(a * n + c, b) = pv((a + b) * n + c);
  for (int a = 0; a < h + t; ++a)
    for (int b = 0; b < s; ++b)
      for (int c = 0; c < p; ++c) P(h * n + a * p + c, b) = pv(nw + (a + b) * p + c);
  return P;
}

Mat j2_hessian_gamma(const AlphaMatrix& alpha, const Mat& Gamma, const EstimatorConfig& cfg) {
  Mat M = j2_map(alpha, Gamma, cfg);
  return M.transpose() * M;
}

Mat j2_hessian(const AlphaMatrix& alpha, const Mat& y_star, const EstimatorConfig& cfg) {
  Mat Gamma = target_row(y_star, cfg.k, cfg.h, cfg.t, cfg.s()) * alpha.alpha;
  return j2_hessian_gamma(alpha, Gamma, cfg);
}

BoxQPResult solve_j2(const Mat& H2, double delta, Method method) {
  bool exact = method == Method::exact ||
               (method == Method::automatic && H2.rows() <= kMaxEnumerationDim);
  return exact ? box_qp_exact(H2, 2.0 * delta) : box_qp_relaxed(H2, 2.0 * delta);
}

DeviationResult max_deviation(const AlphaMatrix& alpha, const Mat& Gamma, const EstimatorConfig& cfg,
                              double delta, Method method, int bound_iters) {
  const int n = cfg.n;
  const double b = 2.0 * delta;
  DeviationResult d;
  const Mat aS = alpha.selected();
  const int s = alpha.s;
  bool ex1 = method == Method::exact || (method == Method::automatic && s <= kMaxEnumerationDim);
  BoxQPResult r1 = ex1 ? box_qp_exact(aS * aS.transpose(), b)
                       : box_qp_relaxed_factored(aS.transpose(), b, 8, bound_iters);
  Mat M2 = j2_map(alpha, Gamma, cfg);
  const int D = static_cast<int>(M2.cols());
  bool ex2 = method == Method::exact || (method == Method::automatic && D <= kMaxEnumerationDim);
  BoxQPResult r2 = ex2 ? box_qp_exact(M2.transpose() * M2, b) : box_qp_relaxed_factored(M2, b, 8, bound_iters);
  d.J1 = n * r1.value;
  d.J1_relaxed = n * r1.relaxed;
  d.J2 = r2.value;
  d.J2_relaxed = r2.relaxed;
  d.J = std::sqrt(std::max(0.0, d.J1 + d.J2));
  d.w_star = r1.x;
  d.p_star = r2.x;
  d.relaxation_gap = (d.J1_relaxed - d.J1) + (d.J2_relaxed - d.J2);
  d.method = ex1 && ex2 ? Method::exact : Method::relaxed;
  return d;
}

DeviationResult max_deviation(const Mat& y_star, const Mat& u_star, const EstimatorConfig& cfg, double delta,
                              Method method) {
  auto alpha = alpha_matrix(y_star, u_star, cfg);
  Mat Gamma = target_row(y_star, cfg.k, cfg.h, cfg.t, cfg.s()) * alpha.alpha;
  return max_deviation(alpha, Gamma, cfg, delta, method);
}

double sample_variance(const std::vector<Mat>& G_list) {
  if (G_list.empty()) throw ConfigError("sample_variance: empty list");
  // running mean, stays exact for identical inputs
  Mat mean = G_list[0];
  for (size_t k = 1; k < G_list.size(); ++k) mean += (G_list[k] - mean) / static_cast<double>(k + 1);
  double mu = 0.0;
  for (const auto& G : G_list) mu += (G - mean).squaredNorm();
  return mu;
}

double linearization_residual(const Mat& L, const Mat& dL) {
  Mat a = L.partialPivLu().inverse();
  Mat full = (L + dL).partialPivLu().inverse();
  return (full - a + a * dL * a).cwiseAbs().maxCoeff();
}

}  // namespace vmsid
