#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "vmsid/errors.hpp"
#include "vmsid/experiments.hpp"
#include "vmsid/io.hpp"

using namespace vmsid;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("vmsid_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ExperimentConfig small_config() {
  auto cfg = ExperimentConfig::canonical_preset();
  cfg.trials = 2;
  cfg.N_schedule = {2, 4};
  return cfg;
}

}  // namespace

TEST(Slope, Examples) {
  std::vector<double> N{10, 20, 40, 80, 160, 320}, inv, isq, cst;
  for (double n : N) {
    inv.push_back(3.0 / n);
    isq.push_back(2.0 / std::sqrt(n));
    cst.push_back(5.0);
  }
  EXPECT_NEAR(convergence_slope(N, inv), -1.0, 1e-9);
  EXPECT_NEAR(convergence_slope(N, isq), -0.5, 1e-9);
  EXPECT_NEAR(convergence_slope(N, cst), 0.0, 1e-9);
  EXPECT_THROW(convergence_slope({1, 2}, {1, 2}), ConfigError);
  EXPECT_THROW(convergence_slope({1, 2, 3}, {1, 0, 2}), NumericError);
}

TEST(Quantile, Basic) {
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 1.0), 4.0);
}

TEST(Csv, EmptyCurveHeaderOnly) {
  auto d = temp_dir("empty");
  emit_csv(ErrorCurves{}, d);
  std::ifstream f(d / "curves.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "N,mode,stat,value");
  EXPECT_FALSE(std::getline(f, line));
  std::ifstream g(d / "trials.csv");
  std::getline(g, line);
  EXPECT_EQ(line, "trial,N,mode,dG,J");
}

TEST(Csv, RoundTrip) {
  ErrorCurves c;
  TrialResult t;
  t.trial = 3;
  t.mode = InputMode::white_noise;
  t.dG[10] = 0.123456789012345678;
  t.J[10] = 1.0 / 3.0;
  c.trials.push_back(t);
  c.rows = compute_curves(c.trials, {10});
  auto d = temp_dir("roundtrip");
  emit_csv(c, d);
  auto back = read_csv(d);
  ASSERT_EQ(back.trials.size(), 1u);
  EXPECT_EQ(back.trials[0].dG.at(10), t.dG.at(10));
  EXPECT_EQ(back.trials[0].J.at(10), t.J.at(10));
  ASSERT_EQ(back.rows.size(), c.rows.size());
  for (size_t i = 0; i < c.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].stat, c.rows[i].stat);
    EXPECT_EQ(back.rows[i].value, c.rows[i].value);
  }
}

TEST(Curves, StatisticsFromRaw) {
  std::vector<TrialResult> ts;
  for (int i = 0; i < 4; ++i) {
    TrialResult t;
    t.trial = i;
    t.dG[5] = double((i + 1) * (i + 1));  // errors 1, 2, 3, 4
    t.J[5] = 10.0 * (i + 1);
    ts.push_back(t);
  }
  ErrorCurves c;
  c.trials = ts;
  c.rows = compute_curves(ts, {5});
  EXPECT_DOUBLE_EQ(c.get(5, InputMode::designed, "err_mean"), 2.5);
  EXPECT_DOUBLE_EQ(c.get(5, InputMode::designed, "err_median"), 2.5);
  EXPECT_DOUBLE_EQ(c.get(5, InputMode::designed, "D_median"), 5.0);
  EXPECT_TRUE(std::isnan(c.get(5, InputMode::white_noise, "err_mean")));
}

TEST(Campaign, DeterministicUnderSeed) {
  auto cfg = small_config();
  auto a = run_campaign(cfg);
  auto b = run_campaign(cfg);
  auto da = temp_dir("det_a"), db = temp_dir("det_b");
  emit_csv(a, da);
  emit_csv(b, db);
  EXPECT_EQ(read_text(da / "curves.csv"), read_text(db / "curves.csv"));
  EXPECT_EQ(read_text(da / "trials.csv"), read_text(db / "trials.csv"));
  EXPECT_EQ(a.failures, 0);
}

TEST(Campaign, ZeroNoiseSingleTrial) {
  auto cfg = small_config();
  cfg.trials = 1;
  cfg.noise = NoiseSpec::uniform(0.0);
  cfg.design.delta = 0.0;
  cfg.design.epsilon = 1.0;
  auto c = run_campaign(cfg);
  for (int N : cfg.N_schedule)
    for (auto mode : cfg.modes) {
      EXPECT_LT(c.get(N, mode, "err_mean"), 1e-6);
      EXPECT_EQ(c.get(N, mode, "err_q3") - c.get(N, mode, "err_q1"), 0.0);
    }
}

TEST(Campaign, PairedNoiseStreams) {
  auto cfg = small_config();
  IdentificationRun d, w;
  run_trial(cfg, 0, InputMode::designed, &d);
  run_trial(cfg, 0, InputMode::white_noise, &w);
  // start-up inputs come from the same stream, so the first samples coincide
  for (int k = 0; k < cfg.design.init_length; ++k) {
    EXPECT_EQ(d.iterations[k].y, w.iterations[k].y);
    EXPECT_EQ(d.iterations[k].u, w.iterations[k].u);
  }
}

TEST(Campaign, NonExcitingInputFails) {
  ExperimentConfig cfg;
  cfg.source = ModelSource::random;
  cfg.random_order = 2;
  Rng rng(cfg.seed, 0, streams::model);
  cfg.model = random_model(2, 1, 1, rng, 0.5);
  cfg.x0 = Vec::Zero(2);
  cfg.est = EstimatorConfig::defaults(2, 1, 1);
  cfg.design.prediction = PredictionModel::nominal;
  cfg.design.horizon = 2;
  cfg.design.white_amplitude = 0.0;
  cfg.modes = {InputMode::white_noise};
  cfg.trials = 3;
  cfg.N_schedule = {2, 3};
  EXPECT_THROW(white_noise_baseline(cfg), NumericError);
}

TEST(Summary, MentionsRatioAndBaseline) {
  auto cfg = small_config();
  cfg.N_schedule = {2, 4};
  auto c = run_campaign(cfg);
  auto text = emit_summary(c, 4);
  EXPECT_NE(text.find("ratio"), std::string::npos);
  EXPECT_NE(text.find("PEM"), std::string::npos);
}

TEST(RunCsv, Header) {
  auto cfg = small_config();
  IdentificationRun run;
  run_trial(cfg, 0, InputMode::designed, &run);
  auto d = temp_dir("run");
  write_run_csv(run, d / "run_0.csv");
  std::ifstream f(d / "run_0.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "iter,u,y,yhat,J,dG,feasible");
  long rows = 0;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, static_cast<long>(run.iterations.size()));
}

TEST(Io, ModelJsonRoundTrip) {
  auto m = canonical_model();
  auto back = model_from_json(model_to_json(m));
  EXPECT_EQ(back.A, m.A);
  EXPECT_EQ(back.B, m.B);
  EXPECT_EQ(back.C, m.C);
  EXPECT_THROW(model_from_json("{\"A\": [[1, 2]], \"B\": [[1]], \"C\": [[1]]}"), ConfigError);
}

TEST(Io, SignalCsvRoundTrip) {
  Rng rng(1);
  Mat U(2, 7);
  for (int i = 0; i < U.size(); ++i) U.data()[i] = rng.gaussian();
  StateSpaceModel m{Mat::Identity(3, 3) * 0.5, Mat::Ones(3, 2), Mat::Ones(2, 3)};
  auto log = simulate(m, Vec::Ones(3), U, NoiseSpec{});
  auto d = temp_dir("sig");
  write_signal_csv(log, d / "s.csv");
  std::ifstream f(d / "s.csv");
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "k,u_1,u_2,y_1,y_2");
  auto back = read_signal_csv(d / "s.csv", 2, 2);
  EXPECT_EQ(back.u, log.u);
  EXPECT_EQ(back.y, log.y);
  auto j = signal_from_json(signal_to_json(log));
  EXPECT_EQ(j.y, log.y);
}

TEST(Io, ConfigParsingAndOverrides) {
  const char* text = R"({"version": 1, "model": {"source": "canonical"},
    "campaign": {"trials": 7, "N_schedule": [5, 10]},
    "design": {"prediction_model": "nominal"}})";
  auto cfg = config_from_json(text, {"campaign.trials=3", "noise.delta=0.02", "campaign.modes=[\"white_noise\"]"});
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_EQ(cfg.N_schedule, (std::vector<int>{5, 10}));
  EXPECT_DOUBLE_EQ(cfg.noise.delta, 0.02);
  EXPECT_DOUBLE_EQ(cfg.design.delta, 0.02);
  ASSERT_EQ(cfg.modes.size(), 1u);
  EXPECT_EQ(cfg.modes[0], InputMode::white_noise);
  EXPECT_EQ(cfg.design.prediction, PredictionModel::nominal);
  EXPECT_THROW(config_from_json(R"({"version": 99})"), ConfigError);
  EXPECT_THROW(config_from_json("not json"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"version": 1, "campaign": {"trials": -1}})"), ConfigError);
  auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(back.trials, 3);
  EXPECT_EQ(back.modes, cfg.modes);
}

TEST(Io, DeviationJson) {
  DeviationResult d;
  d.J = 1.5;
  d.w_star = Vec::Ones(3);
  auto s = deviation_to_json(d);
  EXPECT_NE(s.find("\"J\""), std::string::npos);
  EXPECT_NE(s.find("w_star"), std::string::npos);
}
