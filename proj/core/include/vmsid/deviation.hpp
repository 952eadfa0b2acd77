#pragma once

#include <vector>

#include "vmsid/box_qp.hpp"
#include "vmsid/subspace_id.hpp"

namespace vmsid {

struct AlphaMatrix {
  Mat alpha;  // s x s inverse of L
  int r = 0;
  int s = 0;
  double condition_number = 0.0;

  // alpha * [0; I_r]: the last r columns
  Mat selected() const { return alpha.rightCols(r); }
};

AlphaMatrix alpha_from_L(const Mat& L, int r, double cond_limit = 1e12);
AlphaMatrix alpha_matrix(const Mat& y_star, const Mat& u_star, const EstimatorConfig& cfg,
                         double cond_limit = 1e12);

enum class Method { exact, relaxed, automatic };

// Hessian of one output row of the target-noise term |w' alpha S|^2: (alpha S)(alpha S)' (s x s).
Mat j1_hessian(const AlphaMatrix& alpha);
BoxQPResult solve_j1_exact(const Mat& H, double delta);
BoxQPResult solve_j1_relaxed(const Mat& H, double delta);

// Linear map from the distinct noise samples of P = L[w, e] to vec(Gamma P alpha S).
// Variables: w(k .. k+h+s-2) (n each) then e(k .. k+h+t+s-2) (p each).
// Result is (n r) x ((h+s-1) n + (h+t+s-1) p), vec taken column-major.
Mat j2_map(const AlphaMatrix& alpha, const Mat& Gamma, const EstimatorConfig& cfg);
int j2_dim(const EstimatorConfig& cfg);

// H2 = M2' M2. Gamma = Y*(k+h+t; s) * alpha is taken from y_star.
Mat j2_hessian(const AlphaMatrix& alpha, const Mat& y_star, const EstimatorConfig& cfg);
Mat j2_hessian_gamma(const AlphaMatrix& alpha, const Mat& Gamma, const EstimatorConfig& cfg);
BoxQPResult solve_j2(const Mat& H2, double delta, Method method = Method::automatic);

// Scatter a J2 noise vector back into the s x s perturbation P.
Mat j2_perturbation(const Vec& p, const EstimatorConfig& cfg);

struct DeviationResult {
  double J = 0.0;
  double J1 = 0.0;
  double J2 = 0.0;
  Vec w_star;  // s entries, applied to every output row
  Vec p_star;
  double relaxation_gap = 0.0;  // summed over both sub-problems
  double J1_relaxed = 0.0;
  double J2_relaxed = 0.0;
  Method method = Method::relaxed;
};

// Deviation for an arbitrary regression Gamma = [R, G]. J1 is n times the
// single-row maximum; J = sqrt(J1 + J2). bound_iters only affects the
// reported upper bounds of relaxed sub-problems.
DeviationResult max_deviation(const AlphaMatrix& alpha, const Mat& Gamma,
                              const EstimatorConfig& cfg, double delta,
                              Method method = Method::automatic, int bound_iters = kBoundIters);

// y_star, u_star hold the noise-free window starting at cfg.k
DeviationResult max_deviation(const Mat& y_star, const Mat& u_star, const EstimatorConfig& cfg,
                              double delta, Method method = Method::automatic);

// sum of squared Frobenius deviations from the mean
double sample_variance(const std::vector<Mat>& G_list);

// max-abs entry of (L+dL)^-1 - L^-1 + L^-1 dL L^-1
double linearization_residual(const Mat& L, const Mat& dL);

}  // namespace vmsid
