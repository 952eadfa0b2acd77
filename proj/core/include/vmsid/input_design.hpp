#pragma once

#include <string>
#include <vector>

#include "vmsid/deviation.hpp"
#include "vmsid/plant.hpp"
#include "vmsid/subspace_id.hpp"

namespace vmsid {

enum class InputMode { designed, white_noise };
enum class PredictionModel { estimated, nominal };

struct DesignConfig {
  double delta = 0.05;
  double y_M = 100.0;
  double u_M = 10.0;
  double epsilon = 1e-3;
  double alpha_M = 0.0;  // 0 means sqrt(epsilon / delta)
  int horizon = 4;
  double margin = 0.9;    // fraction of y_M allowed for predicted outputs
  double u_margin = 0.9;  // fraction of u_M allowed for the continuation inputs
  int max_iters = 500;
  double tol = 1e-6;
  double lr0_frac = 0.1;
  double grad_step = 1e-4;
  int scenario_rounds = 3;
  Method method = Method::relaxed;
  PredictionModel prediction = PredictionModel::estimated;
  int init_length = -1;  // -1 means s + 1
  double white_amplitude = 1.0;
  InputMode mode = InputMode::designed;

  double alpha_bound() const;
  void validate() const;
};

// Bordered inverse of L = [[Y, y], [u0', u]] in terms of u2 = 1/(u - u0' Y^-1 y):
// L^-1 = alpha0 + u2 a b', alpha0 = [[Y^-1, 0], [0, 0]], a = [-Y^-1 y; 1],
// b = [-Y^-T u0; 1].
struct BorderedPartition {
  Mat Y_inv;
  Vec y, u0, y1;
  double u = 0.0;
  double sigma = 0.0;  // u0' Y^-1 y
  double u2 = 0.0;
  Vec a, b;

  static BorderedPartition from_matrix(const Mat& L, double cond_limit = 1e14);
  double u2_of(double u_val) const;
  double u_of(double u2_val) const { return sigma + 1.0 / u2_val; }
  Mat alpha0() const;
};

AlphaMatrix bordered_inverse_update(const BorderedPartition& part, double u_new, int r,
                                    double tol = 1e-12);
AlphaMatrix bordered_inverse_u2(const BorderedPartition& part, double u2, int r);

// One noise scenario: deviation vector F u2 + c.
struct Scenario {
  Vec F, c;
};

struct CostAffineForm {
  std::vector<Scenario> scenarios;
};

double cost_j0(double u2, const std::vector<Scenario>& scenarios);
double fd_gradient(double u2, const std::vector<Scenario>& scenarios, double step);

// Affine form of the linearized deviation (W - Gamma P) alpha(u2) S for
// fixed worst-case noise (w_star repeated over the n output rows, p_star in P).
Scenario make_scenario(const BorderedPartition& part, const Mat& Gamma,
                       const EstimatorConfig& cfg, const Vec& w_star, const Vec& p_star);

// Feasible values of u2 = 1/(u - sigma) for u in [lo, hi]: one or two pieces.
struct U2Domain {
  struct Piece {
    double lo, hi;
  };
  std::vector<Piece> pieces;
  static U2Domain from_interval(double lo, double hi, double sigma);
};

struct DesignContext {
  Mat L;          // window L with any value at the corner
  Mat Gamma;      // current [R, G]
  EstimatorConfig est;
  double lo = 0.0, hi = 0.0;  // feasible interval for the corner input
};

struct DesignStepResult {
  double u = 0.0;
  double u2 = 0.0;
  double J0 = 0.0;  // squared worst-case deviation at the returned input
  double sigma = 0.0;
  int iterations = 0;
  int rounds = 0;
  bool projected = false;
  double alpha_tilde = 0.0;
  std::vector<Scenario> scenarios;
};

// Convex descent in u2 over a scenario set; returns best iterate.
double descend_u2(double u2_init, const std::vector<Scenario>& scenarios, const DesignConfig& cfg,
                  int* iterations = nullptr);

DesignStepResult design_input_step(const DesignContext& ctx, const DesignConfig& cfg);

// Output prediction from an estimated model. The h-sample windows give the
// state at the window start; U_next holds inputs from the sample after the
// window on, outputs are predicted for the same samples. Markov blocks of G_hat
// are used for the convolution where available.
Mat predict_output(const StateSpaceModel& model_hat, const MarkovMatrix* G_hat,
                   const Mat& Y_window, const Mat& U_window, const Mat& U_next);

// Predictive safety filter used by the closed loop: the corner input u is
// followed by the deadbeat continuation over cfg.horizon steps.
class SafetyFilter {
 public:
  SafetyFilter() = default;
  SafetyFilter(const StateSpaceModel& model, int h, const DesignConfig& cfg);

  bool ready() const { return ready_; }
  // x(tau) from y(tau-h+1 .. tau) and u(tau-h+1 .. tau-1)
  Vec estimate_state(const Mat& y, const Mat& u, long tau) const;
  Vec continuation(const Vec& x_next) const;
  // first move of the deadbeat sequence from x(tau), used when the set is empty
  double fallback_input(const Vec& x_hat) const;

  struct Interval {
    bool empty = true;
    double lo = 0.0, hi = 0.0;
  };
  Interval feasible_interval(const Vec& x_hat) const;
  Vec predict_next_state(const Vec& x_hat, double u) const;
  double predict_next_output(const Vec& x_hat, double u) const;
  const StateSpaceModel& model() const { return model_; }

 private:
  StateSpaceModel model_;
  DesignConfig cfg_;
  int h_ = 0;
  Mat Oc_pinv_, T_, K_;
  bool ready_ = false;
};

struct FeasibilityReport {
  bool feasible = true;
  double y_margin = 0.0;     // kappa y_M - max |yhat|
  double u_margin = 0.0;     // u_M - max |u|
  double alpha_tilde = 0.0;  // bound on |(L+dL)^-1|_inf
  bool alpha_ok = true;
  bool epsilon_ok = true;
  std::vector<std::string> violated;
};

// Evaluates the candidate sequence u_seq (corner input first) from state
// estimate x_hat. alpha, when given, adds the conditioning constraints.
FeasibilityReport feasible_set_check(const Vec& u_seq, const StateSpaceModel& model,
                                     const Vec& x_hat, const DesignConfig& cfg,
                                     const AlphaMatrix* alpha = nullptr, int s = 0);

// Neumann-series bound on |(L + dL)^-1|_inf for entries of dL bounded by delta
double alpha_tilde(const Mat& alpha, double delta);

struct IterationRecord {
  long iter = 0;
  double u = 0.0;
  double y = 0.0;
  double yhat = 0.0;
  double J = 0.0;
  double dG = 0.0;
  bool feasible = true;
  bool designed = false;
  bool alpha_ok = true;
};

struct BatchRecord {
  int N = 0;
  double J = 0.0;  // deviation of the latest batch
  double D = 0.0;  // J / N
  double dG = 0.0;
  MarkovMatrix G;
};

struct IdentificationRun {
  std::vector<IterationRecord> iterations;
  std::vector<BatchRecord> batches;
  int empty_events = 0;
  int y_violations = 0;
  int design_failures = 0;
  int skipped_batches = 0;
  double y_max = 0.0;
  MarkovMatrix G_hat;
  Realization realization;
  bool has_realization = false;
  std::string failure;
};

struct RunLimits {
  int batches = 10;
  long max_steps = -1;  // stop earlier when positive
};

// `truth` gives the error column and, when cfg.prediction is nominal, the
// prediction model. It may be null for an external plant.
IdentificationRun run_closed_loop(Plant& plant, const StateSpaceModel* truth, int order,
                                  const EstimatorConfig& est, const DesignConfig& cfg,
                                  const RunLimits& limits, Rng input_rng);

}  // namespace vmsid
