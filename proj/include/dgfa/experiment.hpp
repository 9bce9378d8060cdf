#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgfa/kalman.hpp"
#include "dgfa/model.hpp"
#include "dgfa/simulate.hpp"

namespace dgfa {

/// Process exit codes of the experiment runner.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

// Sensor-network example: two pollutant concentrations observed by sensors on
// the vertices of concentric squares, alternating between the two pollutants.
FactorDynamics pollution_dynamics();
LoadingGenerator pollution_loadings();
NoiseModel pollution_noise();
/// Requires N >= 4 and N divisible by 4.
TruncatedModel build_pollution_model(std::size_t N);

struct ModelSpec {
  std::string name;
  FactorDynamics dynamics;
  LoadingGenerator loadings;
  NoiseModel noise;
  bool is_pollution = false;
};

ModelSpec pollution_spec();

/// {"A": [[...], ...] or row-major flat, "Q": ..., "loadings": {"rule": ...},
///  "noise": {"rule": ...}}. Throws Error(ConfigError) on malformed input.
ModelSpec parse_model_spec(const nlohmann::json& j);

struct ExperimentConfig {
  ModelSpec model = pollution_spec();
  std::vector<std::size_t> N_list{4, 8, 16, 32, 64, 128};
  std::size_t T = 100000;
  std::uint64_t seed = 1;
  std::size_t burn_in = 1000;
  InitialState initial = InitialState::stationary;
  Tolerances tol{};
  std::string output_path;
  bool timing = false;
};

/// Relative paths to custom model files resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

/// Per-N seed derived from the run seed with std::seed_seq.
std::uint64_t derive_seed(std::uint64_t seed, std::size_t N);

/// Writes the sweep CSV to `csv` and a one-line verdict to `log` (nullable).
int cmd_sweep(const ExperimentConfig& config, std::ostream& csv, std::ostream* log);

/// Writes empirical-vs-theoretical estimation error statistics per N.
int cmd_simulate(const ExperimentConfig& config, std::ostream& csv, std::ostream* log);

/// Writes the assumption report and both asymptotic profiles.
int cmd_diagnose(const ExperimentConfig& config, std::ostream& report);

std::vector<std::string> sweep_csv_header(bool timing);
std::vector<std::string> simulate_csv_header(std::size_t n);

}  // namespace dgfa
