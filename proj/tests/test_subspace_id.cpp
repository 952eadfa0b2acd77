#include <gtest/gtest.h>

#include "vmsid/errors.hpp"
#include "vmsid/rng.hpp"
#include "vmsid/experiments.hpp"
#include "vmsid/subspace_id.hpp"

using namespace vmsid;

namespace {

Mat white(int p, int T, Rng& rng, double a = 1.0) {
  Mat U(p, T);
  for (int i = 0; i < U.size(); ++i) U.data()[i] = rng.uniform(-a, a);
  return U;
}

double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(EstimatorConfig, Sizes) {
  auto cfg = EstimatorConfig::defaults(4, 1, 1);
  EXPECT_EQ(cfg.h, 4);
  EXPECT_EQ(cfg.t, 9);
  EXPECT_EQ(cfg.s(), 17);
  EXPECT_EQ(cfg.r(), 9);
  EXPECT_EQ(cfg.window(), 30);
  cfg.N = 3;
  EXPECT_EQ(cfg.batch_start(2), 34);
  EXPECT_EQ(cfg.samples_needed(), 64);
}

TEST(NoiseFree, CanonicalH4T5) {
  auto m = canonical_model();
  EstimatorConfig cfg;
  cfg.h = 4;
  cfg.t = 5;
  Rng rng(1);
  auto log = simulate(m, canonical_x0(), white(1, cfg.window(), rng), NoiseSpec{});
  auto G = estimate_markov_noise_free(log.y, log.u, cfg);
  EXPECT_LT((G.G - markov_true(m, 5).G).norm(), 1e-8);
}

TEST(NoiseFree, ScalarSystem) {
  const double a = 0.7, b = 1.5, c = -0.4;
  StateSpaceModel m{Mat::Constant(1, 1, a), Mat::Constant(1, 1, b), Mat::Constant(1, 1, c)};
  EstimatorConfig cfg;
  cfg.h = 1;
  cfg.t = 2;
  Rng rng(2);
  auto log = simulate(m, Vec::Constant(1, 0.3), white(1, cfg.window(), rng), NoiseSpec{});
  auto G = estimate_markov_noise_free(log.y, log.u, cfg);
  EXPECT_NEAR(G.G(0, 0), c * a * b, 1e-12);
  EXPECT_NEAR(G.G(0, 1), c * b, 1e-12);
}

TEST(NoiseFree, InvariantUnderSimilarity) {
  Rng rng(3);
  auto m = random_model(3, 1, 1, rng);
  Mat T(3, 3);
  for (int i = 0; i < 9; ++i) T.data()[i] = rng.gaussian();
  T += 3.0 * Mat::Identity(3, 3);
  StateSpaceModel mt{T * m.A * T.inverse(), T * m.B, m.C * T.inverse()};
  auto cfg = EstimatorConfig::defaults(3, 1, 1);
  Mat U = white(1, cfg.window(), rng);
  Vec x0 = Vec::Ones(3);
  auto g1 = estimate_markov_noise_free(simulate(m, x0, U, NoiseSpec{}).y, U, cfg);
  auto g2 = estimate_markov_noise_free(simulate(mt, T * x0, U, NoiseSpec{}).y, U, cfg);
  EXPECT_LT((g1.G - g2.G).norm(), 1e-9);
}

TEST(NoiseFree, SingularThrowsWithCondition) {
  auto cfg = EstimatorConfig::defaults(2, 1, 1);
  Mat y = Mat::Zero(1, cfg.window());
  Mat u = Mat::Ones(1, cfg.window());
  try {
    estimate_markov_noise_free(y, u, cfg);
    FAIL() << "expected EstimationError";
  } catch (const EstimationError& e) {
    EXPECT_GT(e.condition_number, 1e12);
  }
}

TEST(NoiseFree, RandomMinimalModelsExact) {
  Rng rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    int m = 2 + trial % 5;
    int n = 1 + trial % 2;
    int p = 1 + (trial / 2) % 2;
    auto mod = random_model(m, n, p, rng);
    auto cfg = EstimatorConfig::defaults(m, n, p);
    Mat U(p, cfg.window());
    for (int i = 0; i < U.size(); ++i) U.data()[i] = rng.gaussian();
    Vec x0(m);
    for (int i = 0; i < m; ++i) x0(i) = rng.gaussian();
    auto log = simulate(mod, x0, U, NoiseSpec{});
    auto G = estimate_markov_noise_free(log.y, log.u, cfg);
    EXPECT_LE(rel_err(G.G, markov_true(mod, cfg.t).G), 1e-8) << "trial " << trial;
  }
}

TEST(Batched, NoiseFreeEqualsSingle) {
  auto m = canonical_model();
  auto cfg = EstimatorConfig::defaults(4, 1, 1);
  cfg.N = 3;
  Rng rng(5);
  auto log = simulate(m, canonical_x0(), white(1, cfg.samples_needed(), rng), NoiseSpec{});
  auto Gb = estimate_markov_batched(log.y, log.u, cfg);
  auto single = cfg;
  single.N = 1;
  auto Gs = estimate_markov_noise_free(log.y, log.u, single);
  EXPECT_LT(rel_err(Gb.G, Gs.G), 1e-8);
  EXPECT_LT(rel_err(Gb.G, markov_true(m, 9).G), 1e-8);
}

TEST(Batched, SingleBatchEqualsNoiseFreeFormulaOnNoisyData) {
  auto m = canonical_model();
  auto cfg = EstimatorConfig::defaults(4, 1, 1);
  Rng rng(6), v(7), w(8);
  auto log = simulate(m, canonical_x0(), white(1, cfg.window(), rng), NoiseSpec::uniform(0.05), &v, &w);
  auto Gb = estimate_markov_batched(log.y, log.u, cfg);
  auto Gs = estimate_markov_noise_free(log.y, log.u, cfg);
  EXPECT_LT((Gb.G - Gs.G).norm(), 1e-9 * (1.0 + Gs.G.norm()));
}

TEST(Batched, DegenerateBatchSkipped) {
  auto m = canonical_model();
  auto cfg = EstimatorConfig::defaults(4, 1, 1);
  cfg.N = 3;
  Rng rng(9);
  Mat U = white(1, cfg.samples_needed(), rng);
  auto log = simulate(m, Vec::Zero(4), U, NoiseSpec{});
  // zero the first window entirely: batch 0 singular
  Mat y = log.y, u = log.u;
  y.leftCols(cfg.window()).setZero();
  u.leftCols(cfg.window()).setZero();
  BatchReport rep;
  // batch 1 overlaps the zeroed part but stays full rank
  auto G = estimate_markov_batched(y, u, cfg, &rep);
  EXPECT_EQ(rep.used + static_cast<int>(rep.skipped.size()), 3);
  EXPECT_FALSE(rep.skipped.empty());
  EXPECT_EQ(rep.skipped.front(), 0);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_TRUE(G.G.allFinite());
}

TEST(Batched, AllDegenerateThrows) {
  auto cfg = EstimatorConfig::defaults(2, 1, 1);
  cfg.N = 2;
  Mat z = Mat::Zero(1, cfg.samples_needed());
  EXPECT_THROW(estimate_markov_batched(z, z, cfg), EstimationError);
}

TEST(Batched, CanonicalMeanErrorShrinksWithN) {
  // the canonical plant is open-loop unstable, so the white input runs behind
  // the safety filter
  auto cfg = ExperimentConfig::canonical_preset();
  cfg.trials = 100;
  cfg.N_schedule = {10, 80};
  cfg.modes = {InputMode::white_noise};
  auto c = run_campaign(cfg);
  double m10 = 0, m80 = 0;
  for (const auto& t : c.trials) {
    m10 += t.dG.at(10);
    m80 += t.dG.at(80);
  }
  EXPECT_LT(m80, m10);
}

TEST(HoKalman, CanonicalRoundTrip) {
  auto m = canonical_model();
  auto G = markov_true(m, 9);
  auto R = ho_kalman(G, 4);
  auto G2 = markov_true(R.model(), 9);
  EXPECT_LT((G2.G - G.G).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(R.singular_values.size(), 4);
  EXPECT_TRUE(R.similarity_free);
}

TEST(HoKalman, ZeroIsRankDeficient) {
  MarkovMatrix G{Mat::Zero(1, 9), 9};
  EXPECT_THROW(ho_kalman(G, 4), RankError);
}

TEST(HoKalman, ShortHorizonRejected) {
  auto G = markov_true(canonical_model(), 5);
  EXPECT_THROW(ho_kalman(G, 4), ConfigError);
}

TEST(HoKalman, ScalarRecoversPole) {
  StateSpaceModel m{Mat::Constant(1, 1, -0.6), Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 0.5)};
  auto R = ho_kalman(markov_true(m, 3), 1);
  EXPECT_NEAR(R.A_hat(0, 0), -0.6, 1e-12);
  EXPECT_NEAR(R.C_hat(0, 0) * R.B_hat(0, 0), 1.0, 1e-12);
}

TEST(HoKalman, MimoRoundTrip) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    int m = 2 + trial % 4;
    auto mod = random_model(m, 2, 2, rng);
    auto G = markov_true(mod, 2 * m + 1);
    auto R = ho_kalman(G, m);
    EXPECT_LT((markov_true(R.model(), 2 * m + 1).G - G.G).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(IdentificationError, Definition) {
  Mat a = Mat::Random(2, 6);
  EXPECT_EQ(identification_error(a, a), 0.0);
  EXPECT_DOUBLE_EQ(identification_error(Mat::Ones(1, 5), Mat::Zero(1, 5)), 5.0);
  EXPECT_THROW(identification_error(Mat::Ones(1, 5), Mat::Zero(1, 4)), ConfigError);
}
