#pragma once

#include <string>
#include <vector>

#include "vmsid/lti_core.hpp"

namespace vmsid {

struct EstimatorConfig {
  int h = 4;
  int t = 9;
  int N = 1;     // batch count
  long k = 0;    // start time of batch 0
  int n = 1;
  int p = 1;

  int s() const { return estimator_width(n, p, h, t); }
  int r() const { return t * p; }
  // samples touched by one batch: k .. k+window()-1
  int window() const { return h + t + s(); }
  long batch_start(int i) const { return k + static_cast<long>(s()) * i; }
  long samples_needed() const { return batch_start(N - 1) + window(); }

  void validate() const;
  // h = m, t = 2m + 1
  static EstimatorConfig defaults(int m, int n, int p);
};

// Regressor check. With one output L must be invertible. With n > 1 outputs
// the past-output rows are dependent whenever h n exceeds the state dimension,
// so only the input rows are required to have full rank; the G block of
// Y pinv(L) is still unique in that case.
InvertibilityReport check_regressor(const Mat& L, const EstimatorConfig& cfg, double cond_limit = 1e12);

// Ghat(t) from one window, exact for noise-free data.
MarkovMatrix estimate_markov_noise_free(const Mat& y, const Mat& u, const EstimatorConfig& cfg,
                                        double cond_limit = 1e12);

// [R, G] = Y(k+h+t; s) * pinv(L) for the batch starting at k
Mat batch_regression(const Mat& y, const Mat& u, long k, const EstimatorConfig& cfg);

struct BatchReport {
  int used = 0;
  std::vector<int> skipped;
  std::vector<std::string> warnings;
  Mat RG_mean;  // mean of the per-batch [R, G]
};

MarkovMatrix estimate_markov_batched(const Mat& y, const Mat& u, const EstimatorConfig& cfg,
                                     BatchReport* report = nullptr, double cond_limit = 1e12);

struct Realization {
  Mat A_hat, B_hat, C_hat;
  bool similarity_free = true;  // representative of a similarity class
  Vec singular_values;

  StateSpaceModel model() const { return {A_hat, B_hat, C_hat}; }
};

// Balanced Ho-Kalman. Needs t >= 2m. rank_tol is relative to the largest
// singular value.
Realization ho_kalman(const MarkovMatrix& G, int m, double rank_tol = 1e-10);

// squared Frobenius norm of the difference
double identification_error(const Mat& G_hat, const Mat& G_star);

}  // namespace vmsid
