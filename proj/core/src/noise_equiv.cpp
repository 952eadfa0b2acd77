#include "vmsid/noise_equiv.hpp"

#include <Eigen/SVD>

#include "vmsid/errors.hpp"

namespace vmsid {

namespace {

double inf_norm(const Mat& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

// [A^{m-1}, ..., A, I]
Mat effect_map(const StateSpaceModel& model) {
  const int m = model.m();
  Mat Phi(m, m * m);
  Mat Ap = Mat::Identity(m, m);
  for (int i = m - 1; i >= 0; --i) {
    Phi.middleCols(i * m, m) = Ap;
    Ap = Ap * model.A;
  }
  return Phi;
}

}  // namespace

Vec window_effect(const StateSpaceModel& model, const Mat& V, long k) {
  const int m = model.m();
  Vec x = Vec::Zero(m);
  for (int i = 0; i < m; ++i) {
    x = model.A * x;
    if (k + i < V.cols()) x += V.col(k + i);
  }
  return x;
}

EquivalentNoise process_to_input_noise(const StateSpaceModel& model, const Mat& V, double v_M) {
  model.validate();
  const int m = model.m(), p = model.p();
  if (V.rows() != m) throw ConfigError("process_to_input_noise: V must have m rows");
  Mat Ob = extended_controllability(model, m);
  Eigen::JacobiSVD<Mat> svd(Ob);
  const Vec& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0))
    throw ConfigError("process_to_input_noise: model is not controllable");
  Mat Obr = pinv(Ob);  // m p x m
  const long T = V.cols();
  const long blocks = (T + m - 1) / m;
  Mat E = Mat::Zero(p, blocks * m);
  for (long b = 0; b < blocks; ++b) {
    Vec Eb = Obr * window_effect(model, V, b * m);
    for (int i = 0; i < m; ++i) E.col(b * m + i) = Eb.segment(i * p, p);
  }
  if (v_M < 0.0) v_M = T > 0 ? V.cwiseAbs().maxCoeff() : 0.0;
  EquivalentNoise out;
  out.e = E.leftCols(T);
  out.e_M = inf_norm(Obr) * inf_norm(effect_map(model)) * v_M;
  return out;
}

}  // namespace vmsid
