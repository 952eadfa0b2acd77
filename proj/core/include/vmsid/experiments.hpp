#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vmsid/input_design.hpp"

namespace vmsid {

enum class ModelSource { canonical, file, random };

struct ExperimentConfig {
  ModelSource source = ModelSource::canonical;
  std::string model_path;
  int random_order = 4;
  StateSpaceModel model = canonical_model();
  Vec x0 = canonical_x0();
  NoiseSpec noise = NoiseSpec::uniform(0.05);
  EstimatorConfig est = EstimatorConfig::defaults(4, 1, 1);
  DesignConfig design;
  int trials = 100;
  std::vector<int> N_schedule{10, 20, 40, 80};
  std::vector<InputMode> modes{InputMode::designed, InputMode::white_noise};
  std::uint64_t seed = 1;
  int workers = 1;
  double max_failure_fraction = 0.1;

  // canonical plant with the nominal prediction model and 44 start-up samples
  static ExperimentConfig canonical_preset();
  void validate() const;
  int max_N() const;
};

struct TrialResult {
  int trial = 0;
  InputMode mode = InputMode::designed;
  std::map<int, double> dG;  // squared Frobenius error at batch count N
  std::map<int, double> J;   // deviation of batch N
  int empty_events = 0;
  int y_violations = 0;
  long steps = 0;
  bool failed = false;
  std::string failure;
};

struct CurveRow {
  int N = 0;
  InputMode mode = InputMode::designed;
  std::string stat;
  double value = 0.0;
};

struct ErrorCurves {
  std::vector<TrialResult> trials;
  std::vector<CurveRow> rows;
  int failures = 0;

  // looks up a row, NaN when absent
  double get(int N, InputMode mode, const std::string& stat) const;
};

const char* mode_name(InputMode mode);
InputMode parse_mode(const std::string& s);

TrialResult run_trial(const ExperimentConfig& cfg, int trial, InputMode mode,
                      IdentificationRun* run_out = nullptr);

// Per-N statistics. err_* use the Frobenius norm |Ghat - G*|_F, D_* use J_N / N.
std::vector<CurveRow> compute_curves(const std::vector<TrialResult>& trials,
                                     const std::vector<int>& N_schedule);

ErrorCurves run_campaign(const ExperimentConfig& cfg);
ErrorCurves white_noise_baseline(const ExperimentConfig& cfg);

// least-squares slope of log(value) against log(N)
double convergence_slope(const std::vector<double>& N, const std::vector<double>& values);

// curves.csv and trials.csv in dir
void emit_csv(const ErrorCurves& curves, const std::filesystem::path& dir);
ErrorCurves read_csv(const std::filesystem::path& dir);
std::string emit_summary(const ErrorCurves& curves, int N_ratio = 80);

void write_run_csv(const IdentificationRun& run, const std::filesystem::path& path);

double quantile(std::vector<double> v, double q);

}  // namespace vmsid
