#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tankfdi/askf.hpp"
#include "tankfdi/config.hpp"
#include "tankfdi/consensus.hpp"
#include "tankfdi/detect.hpp"
#include "tankfdi/observer.hpp"

namespace tankfdi {

enum class Estimator { kLuenberger = 0, kAskf = 1, kConsensus = 2 };
inline constexpr std::array<Estimator, 3> kEstimators{Estimator::kLuenberger, Estimator::kAskf,
                                                      Estimator::kConsensus};
const char* estimator_name(Estimator e);

/// Detection times reported for the three default initial conditions.
inline constexpr std::array<double, 3> kReferenceDetectionTimes{2.0235, 2.015, 2.0165};

/// Mean squared error per state over time samples and repetitions; `total` is their sum.
struct MseEntry {
  std::array<double, 3> per_state{};
  double total = 0.0;
  int repetitions = 0;
  std::optional<std::string> error;
};

/// Noise-free plant plus Luenberger observer, used for fault detection.
struct DetectionRun {
  Trajectory plant;
  Trajectory observer;
  ResidualTrace residual;
  DetectionReport report;
};

/// One seeded repetition: noisy truth, its measurements and each filter's estimates
/// on the filter sample grid t_j = j * sample_period, j = 1..M.
struct FilterRun {
  std::vector<double> times;
  std::vector<Vector> truth;
  std::vector<double> fault_flows;
  std::vector<double> inputs;
  std::vector<double> measurements;
  std::vector<Vector> luenberger;
  std::vector<FilterState> askf;
  std::vector<ConsensusState> consensus;
  std::array<std::optional<std::string>, 3> errors;
};

struct ScenarioResult {
  Vector x0;
  DetectionRun detection;
  FilterRun first_repetition;
  std::array<MseEntry, 3> mse;  ///< indexed by Estimator
};

struct RunArtifacts {
  ExperimentConfig config;
  ObserverDesign design;
  ThresholdCurve threshold;
  std::vector<ScenarioResult> scenarios;
  std::vector<std::filesystem::path> csv_paths;
  std::vector<std::filesystem::path> plot_paths;

  /// Mean over scenarios of the per-scenario total MSE.
  double aggregate_mse(Estimator e) const;
};

/// Observer gain and conservative threshold for a configuration.
struct DetectorDesign {
  ObserverDesign observer;
  ThresholdCurve threshold;
  Vector e_hat;
};
DetectorDesign design_detector(const ExperimentConfig& cfg);

/// Noise-free detection run for one initial condition.
DetectionRun run_detection(const ExperimentConfig& cfg, const DetectorDesign& design,
                           const Vector& x0);

/// Detection reports for every configured initial condition.
std::vector<DetectionReport> detect_scenarios(const ExperimentConfig& cfg);

/// Discretized healthy plant used by both Kalman-type filters.
DiscreteModel filter_model(const ExperimentConfig& cfg);

/// One Monte Carlo cell. The noise stream depends only on (seed, scenario, repetition).
FilterRun run_filters(const ExperimentConfig& cfg, const DetectorDesign& design, const Vector& x0,
                      std::size_t scenario, std::size_t repetition);

/// Full comparison: detection per scenario plus Monte Carlo MSE for all estimators.
/// Writes CSVs and SVG plots to cfg.output_dir when write_outputs is set.
RunArtifacts run_experiment(const ExperimentConfig& cfg, bool write_outputs = true);

/// One CSV per scenario for the detection run plus one per scenario and filter.
std::vector<std::filesystem::path> emit_csv(const RunArtifacts& artifacts,
                                            const std::filesystem::path& dir);
/// SVG line charts: states, estimates per estimator, and residual vs threshold.
std::vector<std::filesystem::path> emit_plots(const RunArtifacts& artifacts,
                                              const std::filesystem::path& dir);

struct CalibrationPoint {
  double delta_bar = 0.0;
  std::vector<std::optional<double>> detection_times;
  double max_deviation = 0.0;  ///< vs kReferenceDetectionTimes; infinite if undetected
};

struct CalibrationReport {
  std::vector<CalibrationPoint> points;
  CalibrationPoint best;
  double configured_deviation = 0.0;
};

/// Scans leak coefficients and reports detection-time deviations from the
/// reference values. Requires the three default initial conditions.
CalibrationReport calibrate_leak(const ExperimentConfig& cfg, const std::vector<double>& candidates);

}  // namespace tankfdi
