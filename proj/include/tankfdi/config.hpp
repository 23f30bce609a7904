#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tankfdi/askf.hpp"
#include "tankfdi/common.hpp"
#include "tankfdi/consensus.hpp"
#include "tankfdi/detect.hpp"
#include "tankfdi/model.hpp"

namespace tankfdi {

/// Config parse or validation failure, message prefixed with "source:line:".
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ExperimentConfig {
  // [plant]
  TankParams plant;
  // [input]
  std::vector<double> input_breakpoints{0.0, 1.0};
  std::vector<double> input_values{2.0, 1.0};
  // [fault]
  FaultProfile fault{2.0, 0.5};
  // [observer]
  std::vector<std::complex<double>> poles{-5.0, -8.0, -10.0};
  Vector xhat0 = Vector::Constant(3, 0.25);
  Vector x_lo = Vector::Constant(3, 0.25);
  Vector x_hi = Vector::Constant(3, 4.0);
  ThresholdKind threshold = ThresholdKind::kModal;
  double residual_floor = 1e-9;
  // [askf]
  ScalingParams scaling;
  // [consensus]
  std::size_t sensors = 1;
  ConsensusOptions consensus;
  // [run]
  double dt = 1e-3;
  double horizon = 10.0;
  double sample_period = 0.01;
  double process_noise = 1e-4;
  double measurement_noise = 1e-4;
  double initial_covariance = 1.0;
  std::uint64_t seed = 42;
  int monte_carlo = 20;
  int threads = 0;  ///< 0 picks the hardware concurrency
  std::vector<Vector> initial_conditions{
      Vector::Constant(3, 0.26), Vector::Constant(3, 4.0),
      (Vector(3) << 2.4, 3.6, 1.8).finished()};
  std::filesystem::path output_dir = "tankfdi_out";

  /// Throws ConfigError on any invalid field.
  void validate() const;
  PiecewiseConstantSignal input() const { return {input_breakpoints, input_values}; }
  /// Number of integration steps per filter sample.
  std::size_t steps_per_sample() const;
};

/// Parses the sectioned key = value format. Unknown sections or keys are errors.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace tankfdi
