#pragma once

#include "vmsid/lti_core.hpp"

namespace vmsid {

// max x' H x over |x_i| <= bound
struct BoxQPResult {
  double value = 0.0;
  Vec x;
  double relaxed = 0.0;  // certified upper bound from the semidefinite dual
  double gap = 0.0;      // relaxed - value
  int starts = 0;
};

inline constexpr int kMaxEnumerationDim = 20;
inline constexpr int kBoundIters = 200;

// Vertex enumeration in Gray-code order. Throws std::length_error above
// kMaxEnumerationDim.
BoxQPResult box_qp_exact(const Mat& H, double bound);

// Upper bound on the box maximum from the dual of max tr(QH), Q >= 0,
// Q_ii <= bound^2: b^2 min_z (sum z + d lambda_max(H - diag z)), improved by
// `iters` subgradient steps from z = 0. `lower` is a known attained value.
double box_qp_bound(const Mat& H, double bound, int iters, double lower = 0.0);

// Rounding starts from the sign pattern of every eigenvector with a positive
// eigenvalue, dominant one first, plus `random_starts` hyperplane roundings of
// H^{1/2}; each start is refined by greedy single flips. `relaxed` is
// box_qp_bound with `bound_iters` steps (0 keeps d b^2 lambda_max).
BoxQPResult box_qp_relaxed(const Mat& H, double bound, int random_starts = 8,
                           int bound_iters = kBoundIters);

// Same with H = M' M given by its factor; eigenvectors come from the small
// Gram matrix M M'.
BoxQPResult box_qp_relaxed_factored(const Mat& M, double bound, int random_starts = 8,
                                    int bound_iters = kBoundIters);

// greedy ascent from a vertex; x is modified in place
double flip_ascent(const Mat& H, Vec& x);

}  // namespace vmsid
