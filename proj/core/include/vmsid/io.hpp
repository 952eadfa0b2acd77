#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vmsid/deviation.hpp"
#include "vmsid/experiments.hpp"

namespace vmsid {

// JSON text. Matrices are arrays of rows, signals are column tables keyed by
// the CSV header names.
std::string model_to_json(const StateSpaceModel& model);
StateSpaceModel model_from_json(const std::string& text);
std::string markov_to_json(const MarkovMatrix& G);
std::string realization_to_json(const Realization& r);
std::string deviation_to_json(const DeviationResult& d);
std::string signal_to_json(const SignalLog& log);
SignalLog signal_from_json(const std::string& text);

void write_signal_csv(const SignalLog& log, const std::filesystem::path& path);
SignalLog read_signal_csv(const std::filesystem::path& path, int n, int p);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

inline constexpr int kConfigVersion = 1;

// Versioned config file. Overrides are "dotted.key=value" with JSON values
// (bare words are taken as strings).
ExperimentConfig config_from_json(const std::string& text,
                                  const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace vmsid
