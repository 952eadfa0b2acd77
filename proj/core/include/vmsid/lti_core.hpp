#pragma once

#include <Eigen/Dense>
#include <optional>

namespace vmsid {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Rng;

struct StateSpaceModel {
  Mat A;  // m x m
  Mat B;  // m x p
  Mat C;  // n x m

  int m() const { return static_cast<int>(A.rows()); }
  int n() const { return static_cast<int>(C.rows()); }
  int p() const { return static_cast<int>(B.cols()); }

  // throws ConfigError on inconsistent shapes
  void validate() const;
  bool is_minimal(double tol = 1e-9) const;
};

// Fourth-order controllable-canonical benchmark plant.
StateSpaceModel canonical_model();
Vec canonical_x0();

// Random minimal model with spectral radius `radius`.
StateSpaceModel random_model(int m, int n, int p, Rng& rng, double radius = 0.9);

enum class NoiseKind { uniform, gaussian_truncated };

// delta bounds the process noise v, w_M the output noise w and e_M the
// equivalent input noise used by the deviation analysis.
struct NoiseSpec {
  double delta = 0.0;
  double e_M = 0.0;
  double w_M = 0.0;
  NoiseKind kind = NoiseKind::uniform;
  double sigma_frac = 0.5;  // gaussian sigma as a fraction of the bound

  static NoiseSpec uniform(double d) { return {d, d, d, NoiseKind::uniform, 0.5}; }
  static NoiseSpec gaussian(double d, double frac = 0.5) {
    return {d, d, d, NoiseKind::gaussian_truncated, frac};
  }
};

double sample_noise(const NoiseSpec& spec, double bound, Rng& rng);

// Columns are time samples: u is p x T, y is n x T, x is m x T.
struct SignalLog {
  Mat u;
  Mat y;
  std::optional<Mat> x;
  std::optional<Mat> v;
  std::optional<Mat> w;
  long t0 = 0;

  long length() const { return static_cast<long>(y.cols()); }
  void validate() const;
};

// y(k) = C x(k) + w(k), x(k+1) = A x(k) + B u(k) + v(k).
SignalLog simulate(const StateSpaceModel& model, const Vec& x0, const Mat& U,
                   const Mat& V, const Mat& W, bool keep_state = false);
SignalLog simulate(const StateSpaceModel& model, const Vec& x0, const Mat& U,
                   const NoiseSpec& noise, Rng* v_rng = nullptr, Rng* w_rng = nullptr,
                   bool keep_state = false);

struct HankelBlock {
  Mat data;  // (h*dim) x s
  long k = 0;
  int h = 0;
  int s = 0;
};

// block (i, j), 0-based, holds signal column k+i+j
HankelBlock build_hankel(const Mat& signal, long k, int h, int s);

inline int estimator_width(int n, int p, int h, int t) { return h * n + (h + t) * p; }

// [H_y(k;h;s); H_u(k;h+t;s)], square of size s = h n + (h+t) p
Mat build_L(const Mat& y, const Mat& u, long k, int h, int t);

// Y(k+h+t; s): n x s block of outputs y(k+h+t) ... y(k+h+t+s-1)
Mat target_row(const Mat& y, long k, int h, int t, int s);

struct MarkovMatrix {
  Mat G;  // n x (t p): [C A^{t-1} B, ..., C A B, C B]
  int t = 0;

  int p() const { return t > 0 ? static_cast<int>(G.cols()) / t : 0; }
  // C A^i B, i = 0 .. t-1
  Mat markov(int i) const;
};

MarkovMatrix markov_true(const StateSpaceModel& model, int t);

Mat extended_observability(const StateSpaceModel& model, int h);    // (h n) x m
Mat extended_controllability(const StateSpaceModel& model, int h);  // m x (h p)
Mat toeplitz_T(const StateSpaceModel& model, int h);                // (h n) x (h p)

struct InvertibilityReport {
  bool ok = false;
  double condition_number = 0.0;
};
InvertibilityReport check_invertibility(const Mat& M, double cond_limit = 1e12);

double condition_number(const Mat& M);
Mat pinv(const Mat& M);

}  // namespace vmsid
