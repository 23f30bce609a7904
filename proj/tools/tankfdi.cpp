// tankfdi: observer design, leak detection and filter comparison for the
// three-tank cascade.

#include <cmath>
#include <complex>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tankfdi/analysis.hpp"
#include "tankfdi/config.hpp"
#include "tankfdi/experiment.hpp"

using namespace tankfdi;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<int> threads;
  std::optional<int> reps;
};

// Accepts "-5", "-2+1j", "-2-1.5i".
std::complex<double> parse_pole(const std::string& text) {
  std::string s = text;
  if (!s.empty() && (s.back() == 'j' || s.back() == 'i')) {
    s.pop_back();
    const auto split = s.find_last_of("+-");
    if (split == std::string::npos || split == 0) {
      return {0.0, s.empty() || s == "+" ? 1.0 : s == "-" ? -1.0 : std::stod(s)};
    }
    const std::string im = s.substr(split);
    const double imag = im == "+" ? 1.0 : im == "-" ? -1.0 : std::stod(im);
    return {std::stod(s.substr(0, split)), imag};
  }
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(text);
  return {v, 0.0};
}

std::vector<std::complex<double>> parse_poles(const std::string& list) {
  std::vector<std::complex<double>> poles;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      poles.push_back(parse_pole(item));
    } catch (const std::exception&) {
      throw InvalidParameter("cannot parse pole '" + item + "'");
    }
  }
  return poles;
}

ExperimentConfig resolve(const GlobalOptions& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.dt) cfg.dt = *g.dt;
  if (g.horizon) cfg.horizon = *g.horizon;
  if (g.threads) cfg.threads = *g.threads;
  if (g.reps) cfg.monte_carlo = *g.reps;
  cfg.validate();
  return cfg;
}

std::string fmt(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fmt(std::complex<double> z) {
  if (z.imag() == 0.0) return fmt(z.real());
  return fmt(z.real()) + (z.imag() < 0 ? "-" : "+") + fmt(std::abs(z.imag())) + "j";
}

std::string fmt(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
  return s + "]";
}

void print_report(std::size_t i, const Vector& x0, const DetectionReport& r) {
  std::cout << "scenario " << i + 1 << "  x0=" << fmt(x0) << "  ";
  if (r.detected) {
    std::cout << "detected t_d=" << fmt(*r.t_d, 8) << "  first_sample=" << fmt(*r.t_d_sample, 8)
              << "  latency=" << fmt(*r.t_d - r.t_f_configured.value_or(0.0), 6) << '\n';
  } else {
    std::cout << "not detected\n";
  }
}

int cmd_design(const GlobalOptions& g, const std::string& poles) {
  ExperimentConfig cfg = resolve(g);
  if (!poles.empty()) cfg.poles = parse_poles(poles);
  const StateSpace ss = build_healthy(cfg.plant);
  const ObserverDesign d = place_observer_poles(ss, cfg.poles);
  std::cout << "plant eigenvalues:";
  for (auto z : eigenvalues(ss.A)) std::cout << ' ' << fmt(z);
  std::cout << "\ndesired poles:";
  for (auto z : d.desired_poles) std::cout << ' ' << fmt(z);
  std::cout << "\nPsi_o = " << fmt(d.Psi_o) << "\nPsi   = " << fmt(d.Psi)
            << "\nGamma_d eigenvalues:";
  for (auto z : eigenvalues(d.Gamma_d)) std::cout << ' ' << fmt(z);
  const DetectorDesign det = design_detector(cfg);
  std::cout << "\nthreshold modes (" << (cfg.threshold == ThresholdKind::kBox ? "box" : "modal") << "):";
  if (det.threshold.sampled) {
    std::cout << " sampled envelope, dt=" << fmt(det.threshold.sample_dt);
  } else {
    for (const auto& m : det.threshold.modes) {
      std::cout << ' ' << fmt(m.coefficient) << "*exp(" << fmt(m.pole) << " t)";
    }
  }
  std::cout << "\nthreshold floor: " << fmt(det.threshold.floor) << '\n';
  return 0;
}

int cmd_simulate(const GlobalOptions& g, const std::string& out) {
  ExperimentConfig cfg = resolve(g);
  if (!out.empty()) cfg.output_dir = out;
  const RunArtifacts art = run_experiment(cfg, true);
  for (std::size_t i = 0; i < art.scenarios.size(); ++i) {
    print_report(i, art.scenarios[i].x0, art.scenarios[i].detection.report);
  }
  for (const auto& p : art.csv_paths) std::cout << "wrote " << p.string() << '\n';
  for (const auto& p : art.plot_paths) std::cout << "wrote " << p.string() << '\n';
  return 0;
}

int cmd_detect(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve(g);
  const auto reports = detect_scenarios(cfg);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    print_report(i, cfg.initial_conditions[i], reports[i]);
  }
  return 0;
}

int cmd_compare(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve(g);
  const RunArtifacts art = run_experiment(cfg, false);
  std::printf("%-10s %-12s %14s %14s %14s %14s\n", "scenario", "estimator", "mse_x1", "mse_x2",
              "mse_x3", "mse_total");
  for (std::size_t i = 0; i < art.scenarios.size(); ++i) {
    for (Estimator e : kEstimators) {
      const MseEntry& m = art.scenarios[i].mse[static_cast<std::size_t>(e)];
      std::printf("%-10zu %-12s %14.6g %14.6g %14.6g %14.6g", i + 1, estimator_name(e),
                  m.per_state[0], m.per_state[1], m.per_state[2], m.total);
      if (m.error) std::printf("  (%d/%d reps, error: %s)", m.repetitions, cfg.monte_carlo,
                               m.error->c_str());
      std::printf("\n");
    }
  }
  for (Estimator e : kEstimators) {
    std::printf("aggregate  %-12s %14.6g\n", estimator_name(e), art.aggregate_mse(e));
  }
  return 0;
}

int cmd_calibrate(const GlobalOptions& g, double lo, double hi, double step) {
  const ExperimentConfig cfg = resolve(g);
  if (!(step > 0.0) || hi < lo) throw InvalidParameter("calibration range must satisfy lo <= hi, step > 0");
  std::vector<double> candidates;
  for (double d = lo; d <= hi + 1e-12; d += step) candidates.push_back(d);
  const CalibrationReport rep = calibrate_leak(cfg, candidates);
  for (const auto& p : rep.points) {
    std::cout << "delta_bar=" << fmt(p.delta_bar, 6) << "  t_d=";
    for (const auto& t : p.detection_times) std::cout << (t ? fmt(*t, 8) : "none") << ' ';
    std::cout << " max_dev=" << fmt(p.max_deviation, 4) << '\n';
  }
  std::cout << "best delta_bar=" << fmt(rep.best.delta_bar, 6)
            << "  max_dev=" << fmt(rep.best.max_deviation, 4) << "\nconfigured delta_bar="
            << fmt(cfg.fault.delta_bar, 6) << "  max_dev=" << fmt(rep.configured_deviation, 4)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leak detection and state estimation for a three-tank cascade"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--dt", g.dt, "Integration step [s]");
  app.add_option("--horizon", g.horizon, "Simulation horizon [s]");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--reps", g.reps, "Monte Carlo repetitions");

  std::string poles, out;
  double cal_lo = 0.1, cal_hi = 1.5, cal_step = 0.05;
  auto* design = app.add_subcommand("design", "Observer gain, error poles and threshold");
  design->add_option("--poles", poles, "Desired observer poles, e.g. -5,-8,-10");
  auto* simulate = app.add_subcommand("simulate", "Full run with CSV and SVG output");
  simulate->add_option("--out", out, "Output directory");
  auto* detect = app.add_subcommand("detect", "Detection report per initial condition");
  auto* compare = app.add_subcommand("compare", "Monte Carlo MSE table");
  auto* calibrate = app.add_subcommand("calibrate", "Scan leak coefficients against reference detection times");
  calibrate->add_option("--from", cal_lo, "Smallest leak coefficient");
  calibrate->add_option("--to", cal_hi, "Largest leak coefficient");
  calibrate->add_option("--step", cal_step, "Scan step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*design) return cmd_design(g, poles);
    if (*simulate) return cmd_simulate(g, out);
    if (*detect) return cmd_detect(g);
    if (*compare) return cmd_compare(g);
    if (*calibrate) return cmd_calibrate(g, cal_lo, cal_hi, cal_step);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
