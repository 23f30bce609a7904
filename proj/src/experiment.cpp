#include "tankfdi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <random>
#include <thread>

#include <boost/random/normal_distribution.hpp>

namespace tankfdi {

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kLuenberger:
      return "luenberger";
    case Estimator::kAskf:
      return "askf";
    case Estimator::kConsensus:
      return "consensus";
  }
  return "?";
}

double RunArtifacts::aggregate_mse(Estimator e) const {
  if (scenarios.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (const auto& s : scenarios) acc += s.mse[static_cast<std::size_t>(e)].total;
  return acc / static_cast<double>(scenarios.size());
}

DetectorDesign design_detector(const ExperimentConfig& cfg) {
  const StateSpace ss = build_healthy(cfg.plant);
  DetectorDesign d;
  d.observer = place_observer_poles(ss, cfg.poles);
  d.e_hat = initial_error_bound(cfg.x_lo, cfg.x_hi, cfg.xhat0);
  d.threshold = build_threshold(d.observer.Gamma_d, ss.C, d.e_hat, cfg.threshold, cfg.residual_floor);
  return d;
}

DetectionRun run_detection(const ExperimentConfig& cfg, const DetectorDesign& design,
                           const Vector& x0) {
  DetectionRun run;
  const StateSpace ss = build_healthy(cfg.plant);
  const auto input = cfg.input();
  run.plant = simulate(cfg.plant, input, cfg.fault, x0, cfg.dt, cfg.horizon);
  run.observer = run_luenberger(ss, design.observer.Psi, input,
                                SampledOutput(run.plant.outputs, cfg.dt), cfg.xhat0);
  run.residual = residual(run.plant, run.observer);
  run.report = detect(run.residual, design.threshold, cfg.fault.t_f);
  return run;
}

std::vector<DetectionReport> detect_scenarios(const ExperimentConfig& cfg) {
  cfg.validate();
  const DetectorDesign design = design_detector(cfg);
  std::vector<DetectionReport> reports;
  for (const auto& x0 : cfg.initial_conditions) {
    reports.push_back(run_detection(cfg, design, x0).report);
  }
  return reports;
}

DiscreteModel filter_model(const ExperimentConfig& cfg) {
  const StateSpace ss = build_healthy(cfg.plant);
  const DiscretePair d = discretize_zoh(ss.A, ss.B, cfg.sample_period);
  DiscreteModel m;
  m.A = d.Ad;
  m.B = d.Bd;
  m.Theta = ss.C;
  m.Q = Matrix::Constant(1, 1, cfg.process_noise);
  m.R = Matrix::Constant(1, 1, cfg.measurement_noise);
  return m;
}

FilterRun run_filters(const ExperimentConfig& cfg, const DetectorDesign& design, const Vector& x0,
                      std::size_t scenario, std::size_t repetition) {
  const StateSpace ss = build_healthy(cfg.plant);
  const auto input = cfg.input();
  const double ts = cfg.sample_period;
  const std::size_t ratio = cfg.steps_per_sample();
  const auto samples = static_cast<std::size_t>(std::floor(cfg.horizon / ts + 1e-9));

  // Independent stream per (seed, scenario, repetition).
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(scenario), static_cast<std::uint32_t>(repetition)};
  std::mt19937_64 rng(seq);
  boost::random::normal_distribution<double> process(0.0, std::sqrt(cfg.process_noise));
  boost::random::normal_distribution<double> sensor(0.0, std::sqrt(cfg.measurement_noise));

  std::vector<double> breakpoints(samples), noisy_input(samples), meas_noise(samples + 1);
  for (std::size_t j = 0; j <= samples; ++j) {
    if (j < samples) {
      breakpoints[j] = static_cast<double>(j) * ts;
      noisy_input[j] = input(breakpoints[j]) + process(rng);
    }
    meas_noise[j] = sensor(rng);
  }

  const Trajectory truth = simulate(cfg.plant, PiecewiseConstantSignal(breakpoints, noisy_input),
                                    cfg.fault, x0, cfg.dt, static_cast<double>(samples) * ts);

  FilterRun run;
  std::vector<double> y(samples + 1);
  for (std::size_t j = 0; j <= samples; ++j) {
    const std::size_t idx = j * ratio;
    y[j] = truth.outputs[idx](0) + meas_noise[j];
    if (j == 0) continue;
    run.times.push_back(truth.times[idx]);
    run.truth.push_back(truth.states[idx]);
    run.fault_flows.push_back(truth.fault_flows[idx]);
    run.inputs.push_back(input(truth.times[idx]));
    run.measurements.push_back(y[j]);
  }

  try {
    // The observer runs on the integration grid; measurements are joined by
    // cubic Lagrange interpolation through the four nearest samples.
    std::vector<Vector> stream(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const std::size_t j = std::min(k / ratio, samples - 1);
      const double s = static_cast<double>(j) +
                       static_cast<double>(k - j * ratio) / static_cast<double>(ratio);
      const std::size_t lo = j == 0 ? 0 : j - 1;
      const std::size_t hi = std::min(samples, j + 2);
      double value = 0.0;
      for (std::size_t a = lo; a <= hi; ++a) {
        double weight = 1.0;
        for (std::size_t b = lo; b <= hi; ++b) {
          if (b != a) weight *= (s - static_cast<double>(b)) / (static_cast<double>(a) - static_cast<double>(b));
        }
        value += weight * y[a];
      }
      stream[k] = Vector::Constant(1, value);
    }
    const Trajectory obs = run_luenberger(ss, design.observer.Psi, input,
                                          SampledOutput(std::move(stream), cfg.dt), cfg.xhat0);
    for (std::size_t j = 1; j <= samples; ++j) run.luenberger.push_back(obs.states[j * ratio]);
  } catch (const Error& e) {
    run.errors[0] = e.what();
  }

  const DiscreteModel model = filter_model(cfg);
  const Matrix P0 = cfg.initial_covariance * Matrix::Identity(3, 3);
  std::vector<Vector> inputs, measurements;
  std::vector<std::vector<Vector>> network_measurements;
  for (std::size_t j = 1; j <= samples; ++j) {
    inputs.push_back(Vector::Constant(1, input(static_cast<double>(j - 1) * ts)));
    measurements.push_back(Vector::Constant(1, y[j]));
    network_measurements.emplace_back(cfg.sensors, measurements.back());
  }

  try {
    run.askf = run_askf(model, cfg.scaling, cfg.xhat0, P0, inputs, measurements);
  } catch (const Error& e) {
    run.errors[1] = e.what();
  }
  try {
    const SensorNetwork net = SensorNetwork::identical(model.Theta, model.R, cfg.sensors);
    run.consensus = run_consensus(model, net, cfg.xhat0, P0, inputs, network_measurements,
                                  cfg.consensus);
  } catch (const Error& e) {
    run.errors[2] = e.what();
  }
  return run;
}

namespace {

std::array<MseEntry, 3> cell_mse(const FilterRun& run) {
  std::array<MseEntry, 3> out;
  const std::size_t n = run.truth.size();
  for (Estimator e : kEstimators) {
    const auto idx = static_cast<std::size_t>(e);
    MseEntry& m = out[idx];
    if (run.errors[idx]) {
      m.error = run.errors[idx];
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const Vector& est = e == Estimator::kLuenberger ? run.luenberger[j]
                          : e == Estimator::kAskf     ? run.askf[j].xhat
                                                      : run.consensus[j].xm;
      const Vector diff = run.truth[j] - est;
      for (int i = 0; i < 3; ++i) m.per_state[static_cast<std::size_t>(i)] += diff(i) * diff(i);
    }
    for (double& v : m.per_state) v /= static_cast<double>(n);
    m.total = m.per_state[0] + m.per_state[1] + m.per_state[2];
    m.repetitions = 1;
  }
  return out;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg, bool write_outputs) {
  cfg.validate();
  RunArtifacts art;
  art.config = cfg;
  const DetectorDesign design = design_detector(cfg);
  art.design = design.observer;
  art.threshold = design.threshold;

  const std::size_t scenarios = cfg.initial_conditions.size();
  const auto reps = static_cast<std::size_t>(cfg.monte_carlo);
  art.scenarios.resize(scenarios);
  for (std::size_t s = 0; s < scenarios; ++s) {
    art.scenarios[s].x0 = cfg.initial_conditions[s];
    art.scenarios[s].detection = run_detection(cfg, design, cfg.initial_conditions[s]);
  }

  // Cells are independent; results land in fixed slots so the merge order is
  // the canonical (scenario, repetition) order regardless of scheduling.
  const std::size_t cells = scenarios * reps;
  std::vector<std::array<MseEntry, 3>> results(cells);
  std::vector<std::exception_ptr> failures(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      const std::size_t s = c / reps;
      const std::size_t r = c % reps;
      try {
        FilterRun run = run_filters(cfg, design, cfg.initial_conditions[s], s, r);
        results[c] = cell_mse(run);
        if (r == 0) art.scenarios[s].first_repetition = std::move(run);
      } catch (...) {
        failures[c] = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cells);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  for (std::size_t s = 0; s < scenarios; ++s) {
    for (Estimator e : kEstimators) {
      const auto idx = static_cast<std::size_t>(e);
      MseEntry& agg = art.scenarios[s].mse[idx];
      for (std::size_t r = 0; r < reps; ++r) {
        const MseEntry& m = results[s * reps + r][idx];
        if (m.error) {
          if (!agg.error) agg.error = m.error;
          continue;
        }
        for (std::size_t i = 0; i < 3; ++i) agg.per_state[i] += m.per_state[i];
        ++agg.repetitions;
      }
      if (agg.repetitions == 0) {
        agg.total = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      for (double& v : agg.per_state) v /= agg.repetitions;
      agg.total = agg.per_state[0] + agg.per_state[1] + agg.per_state[2];
    }
  }

  if (write_outputs) {
    std::filesystem::create_directories(cfg.output_dir);
    art.csv_paths = emit_csv(art, cfg.output_dir);
    art.plot_paths = emit_plots(art, cfg.output_dir);
  }
  return art;
}

CalibrationReport calibrate_leak(const ExperimentConfig& cfg, const std::vector<double>& candidates) {
  cfg.validate();
  if (cfg.initial_conditions.size() != kReferenceDetectionTimes.size()) {
    throw InvalidParameter("calibration needs exactly the three reference initial conditions");
  }
  auto evaluate = [&](double delta_bar) {
    ExperimentConfig c = cfg;
    c.fault.delta_bar = delta_bar;
    CalibrationPoint point;
    point.delta_bar = delta_bar;
    const auto reports = detect_scenarios(c);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      point.detection_times.push_back(reports[i].t_d);
      const double dev = reports[i].t_d
                             ? std::abs(*reports[i].t_d - kReferenceDetectionTimes[i])
                             : std::numeric_limits<double>::infinity();
      point.max_deviation = std::max(point.max_deviation, dev);
    }
    return point;
  };

  CalibrationReport report;
  report.best.max_deviation = std::numeric_limits<double>::infinity();
  for (double d : candidates) {
    report.points.push_back(evaluate(d));
    if (report.points.back().max_deviation < report.best.max_deviation) {
      report.best = report.points.back();
    }
  }
  report.configured_deviation = evaluate(cfg.fault.delta_bar).max_deviation;
  return report;
}

}  // namespace tankfdi
