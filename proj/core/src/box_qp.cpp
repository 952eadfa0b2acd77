#include "vmsid/box_qp.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vmsid/rng.hpp"

namespace vmsid {

namespace {

Vec sign_round(const Vec& v, double bound) {
  const double tie = 1e-12 * v.cwiseAbs().maxCoeff();
  Vec x(v.size());
  for (int i = 0; i < v.size(); ++i) x(i) = v(i) < -tie ? -bound : bound;
  return x;
}

// Round each direction to a vertex, refine, keep the best. `dirs` holds the
// eigenvectors (dominant first); `range` spans the positive eigenspace and is
// used for random hyperplanes.
BoxQPResult round_best(const Mat& H, const Mat& dirs, const Mat& range, double bound,
                       int random_starts, double relaxed) {
  const int d = static_cast<int>(H.rows());
  BoxQPResult best;
  best.value = -INFINITY;
  best.relaxed = relaxed;
  auto consider = [&](Vec x) {
    double v = flip_ascent(H, x);
    ++best.starts;
    if (v > best.value) {
      best.value = v;
      best.x = std::move(x);
    }
  };
  for (int j = 0; j < dirs.cols(); ++j) consider(sign_round(dirs.col(j), bound));
  if (range.cols() > 0) {
    Rng rng(0x5eed, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(range.cols()));
    Vec g(range.cols());
    for (int k = 0; k < random_starts; ++k) {
      for (int i = 0; i < g.size(); ++i) g(i) = rng.gaussian();
      consider(sign_round(range * g, bound));
    }
  }
  if (best.starts == 0) consider(Vec::Constant(d, bound));
  best.gap = best.relaxed - best.value;
  return best;
}

void tighten(BoxQPResult& res, const Mat& H, double bound, int iters) {
  if (iters > 0) res.relaxed = std::min(res.relaxed, box_qp_bound(H, bound, iters, res.value));
  res.relaxed = std::max(res.relaxed, res.value);
  res.gap = res.relaxed - res.value;
}

}  // namespace

double box_qp_bound(const Mat& H, double bound, int iters, double lower) {
  const int d = static_cast<int>(H.rows());
  if (d == 0) return 0.0;
  Mat Hs = 0.5 * (H + H.transpose());
  // any z gives b^2 (sum z + d lambda_max(H - diag z)) >= max over the box
  Vec z = Vec::Zero(d);
  double best = INFINITY;
  Eigen::SelfAdjointEigenSolver<Mat> es;
  for (int it = 0; it <= iters; ++it) {
    Mat M = Hs;
    M.diagonal() -= z;
    es.compute(M);
    double f = bound * bound * (z.sum() + d * es.eigenvalues()(d - 1));
    best = std::min(best, f);
    if (it == iters || best - lower <= 1e-12 * std::abs(best)) break;
    Vec v = es.eigenvectors().col(d - 1);
    Vec g = bound * bound * (Vec::Ones(d) - d * v.cwiseAbs2());
    double gn = g.squaredNorm();
    if (gn <= 1e-300) break;
    double target = std::max(lower, 0.0);
    z -= (f - target) / gn * g / std::sqrt(1.0 + it);
  }
  return best;
}

double flip_ascent(const Mat& H, Vec& x) {
  const int d = static_cast<int>(x.size());
  Vec g = H * x;
  double val = x.dot(g);
  for (int it = 0; it < 10 * d + 100; ++it) {
    int best = -1;
    double gain = 0.0;
    for (int i = 0; i < d; ++i) {
      double dlt = -4.0 * x(i) * g(i) + 4.0 * H(i, i) * x(i) * x(i);
      if (dlt > gain) {
        gain = dlt;
        best = i;
      }
    }
    if (best < 0 || gain <= 1e-13 * std::max(std::abs(val), 1e-300)) break;
    g -= 2.0 * x(best) * H.col(best);
    x(best) = -x(best);
    val += gain;
  }
  return x.dot(H * x);
}

BoxQPResult box_qp_exact(const Mat& H, double bound) {
  const int d = static_cast<int>(H.rows());
  if (d > kMaxEnumerationDim)
    throw std::length_error("box_qp_exact: dimension " + std::to_string(d) + " exceeds " +
                            std::to_string(kMaxEnumerationDim));
  BoxQPResult res;
  if (d == 0) return res;
  Mat Hs = 0.5 * (H + H.transpose());
  Vec x = Vec::Constant(d, bound);
  Vec g = Hs * x;
  double val = x.dot(g);
  Vec best_x = x;
  double best = val;
  // x and -x give the same value: fix the last coordinate, Gray-code the rest
  const long count = 1L << (d - 1);
  for (long i = 1; i < count; ++i) {
    int j = std::countr_zero(static_cast<unsigned long>(i));
    val += -4.0 * x(j) * g(j) + 4.0 * Hs(j, j) * x(j) * x(j);
    g -= 2.0 * x(j) * Hs.col(j);
    x(j) = -x(j);
    if (val > best) {
      best = val;
      best_x = x;
    }
  }
  res.x = best_x;
  res.value = best_x.dot(Hs * best_x);
  res.relaxed = std::max(box_qp_bound(Hs, bound, kBoundIters, res.value), res.value);
  res.gap = res.relaxed - res.value;
  res.starts = static_cast<int>(count);
  return res;
}

BoxQPResult box_qp_relaxed(const Mat& H, double bound, int random_starts, int bound_iters) {
  const int d = static_cast<int>(H.rows());
  if (d == 0) return {};
  Mat Hs = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(Hs);
  const Vec& lam = es.eigenvalues();  // ascending
  const double top = lam(d - 1);
  double relaxed = bound * bound * d * std::max(top, 0.0);
  int pos = 0;
  for (int i = d - 1; i >= 0 && lam(i) > 1e-12 * std::max(top, 0.0) && lam(i) > 0.0; --i) ++pos;
  Mat dirs(d, pos), range(d, pos);
  for (int j = 0; j < pos; ++j) {
    int i = d - 1 - j;
    dirs.col(j) = es.eigenvectors().col(i);
    range.col(j) = es.eigenvectors().col(i) * std::sqrt(lam(i));
  }
  auto res = round_best(Hs, dirs, range, bound, random_starts, relaxed);
  tighten(res, Hs, bound, bound_iters);
  return res;
}

BoxQPResult box_qp_relaxed_factored(const Mat& M, double bound, int random_starts, int bound_iters) {
  const int d = static_cast<int>(M.cols()), k = static_cast<int>(M.rows());
  if (d == 0) return {};
  Mat H = M.transpose() * M;
  if (k >= d) return box_qp_relaxed(H, bound, random_starts, bound_iters);
  Mat K = M * M.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(K);
  const Vec& lam = es.eigenvalues();
  const double top = lam(k - 1);
  double relaxed = bound * bound * d * std::max(top, 0.0);
  int pos = 0;
  for (int i = k - 1; i >= 0 && lam(i) > 1e-12 * std::max(top, 0.0) && lam(i) > 0.0; --i) ++pos;
  Mat dirs(d, pos);
  for (int j = 0; j < pos; ++j) {
    int i = k - 1 - j;
    dirs.col(j) = M.transpose() * es.eigenvectors().col(i) / std::sqrt(lam(i));
  }
  // H^{1/2} g ~ M' g' in distribution
  Mat range = pos > 0 ? Mat(M.transpose()) : Mat(d, 0);
  auto res = round_best(H, dirs, range, bound, random_starts, relaxed);
  tighten(res, H, bound, bound_iters);
  return res;
}

}  // namespace vmsid
