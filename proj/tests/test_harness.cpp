#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "tankfdi/experiment.hpp"
#include "tankfdi/svg.hpp"

using namespace tankfdi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tankfdi_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.horizon = 4.0;
  c.monte_carlo = 3;
  return c;
}

double total_error(const FilterRun& run) {
  double acc = 0.0;
  for (std::size_t j = 0; j < run.truth.size(); ++j) acc += (run.truth[j] - run.askf[j].xhat).squaredNorm();
  return acc / static_cast<double>(run.truth.size());
}

}  // namespace

TEST(RunExperiment, DefaultOutputs) {
  ExperimentConfig c;
  c.output_dir = scratch("default");
  const auto art = run_experiment(c);
  int scenario_csv = 0, svg = 0;
  for (const auto& p : art.csv_paths) {
    ASSERT_TRUE(fs::exists(p));
    if (p.filename().string().rfind("scenario_", 0) == 0) ++scenario_csv;
  }
  for (const auto& p : art.plot_paths) {
    ASSERT_TRUE(fs::exists(p));
    if (p.extension() == ".svg") ++svg;
  }
  EXPECT_EQ(scenario_csv, 3);
  EXPECT_GE(svg, 9);

  const double ref[] = {2.0235, 2.015, 2.0165};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& r = art.scenarios[i].detection.report;
    ASSERT_TRUE(r.detected);
    EXPECT_NEAR(*r.t_d, ref[i], 0.02);
  }
  EXPECT_LE(art.aggregate_mse(Estimator::kAskf), art.aggregate_mse(Estimator::kConsensus));
  for (const auto& s : art.scenarios) {
    for (const auto& m : s.mse) {
      EXPECT_FALSE(m.error.has_value());
      EXPECT_EQ(m.repetitions, 20);
    }
  }
  fs::remove_all(c.output_dir);
}

TEST(RunExperiment, CsvSchema) {
  ExperimentConfig c = small_config();
  c.output_dir = scratch("schema");
  const auto art = run_experiment(c);
  const std::string header = "t,x1,x2,x3,y,u,f,xhat1,xhat2,xhat3,yhat,eps,eps_bar,phi";
  for (const auto& p : art.csv_paths) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, header);
    std::getline(in, line);
    std::getline(in, line);
    const bool askf = p.filename().string().rfind("askf_", 0) == 0;
    EXPECT_EQ(line.back() == ',', !askf) << p;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 13);
  }
  const std::string body = slurp(art.csv_paths.front());
  EXPECT_NE(body.find("0.26000000000000001"), std::string::npos);
  fs::remove_all(c.output_dir);
}

TEST(RunExperiment, BitIdenticalAcrossRunsAndThreadCounts) {
  ExperimentConfig a = small_config();
  a.threads = 1;
  a.output_dir = scratch("det_a");
  ExperimentConfig b = small_config();
  b.threads = 4;
  b.output_dir = scratch("det_b");
  const auto ra = run_experiment(a);
  const auto rb = run_experiment(b);
  ASSERT_EQ(ra.csv_paths.size(), rb.csv_paths.size());
  for (std::size_t i = 0; i < ra.csv_paths.size(); ++i) {
    EXPECT_EQ(slurp(ra.csv_paths[i]), slurp(rb.csv_paths[i])) << ra.csv_paths[i];
  }
  for (std::size_t s = 0; s < ra.scenarios.size(); ++s) {
    for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(ra.scenarios[s].mse[e].total, rb.scenarios[s].mse[e].total);
  }
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);
}

TEST(RunExperiment, SeedChangesNoise) {
  ExperimentConfig a = small_config();
  ExperimentConfig b = small_config();
  b.seed = a.seed + 1;
  const auto ra = run_experiment(a, false);
  const auto rb = run_experiment(b, false);
  EXPECT_NE(ra.scenarios[0].mse[1].total, rb.scenarios[0].mse[1].total);
}

TEST(RunExperiment, PerfectInformation) {
  ExperimentConfig c;
  c.monte_carlo = 1;
  c.fault.delta_bar = 0.0;
  c.process_noise = 0.0;
  c.initial_conditions = {c.xhat0};
  // R must stay invertible for the information form, so shrink it instead of zeroing it.
  c.measurement_noise = 1e-14;
  const auto coarse = run_experiment(c, false);
  c.measurement_noise = 1e-16;
  const auto fine = run_experiment(c, false);
  for (Estimator e : kEstimators) {
    const auto i = static_cast<std::size_t>(e);
    const auto& m = coarse.scenarios[0].mse[i];
    EXPECT_FALSE(m.error.has_value());
    EXPECT_LE(m.total, 1e-6) << estimator_name(e);
    // Whatever error remains is driven by the measurement noise alone.
    EXPECT_NEAR(m.total / fine.scenarios[0].mse[i].total, 100.0, 10.0) << estimator_name(e);
  }
}

TEST(RunExperiment, ResidualPlotMarksDetectionTime) {
  ExperimentConfig c = small_config();
  c.output_dir = scratch("plot");
  const auto art = run_experiment(c);
  const std::regex marker(R"re(id="td" data-x="([^"]+)")re");
  for (std::size_t i = 0; i < art.scenarios.size(); ++i) {
    const std::string svg = slurp(c.output_dir / ("residual_" + std::to_string(i + 1) + ".svg"));
    std::smatch m;
    ASSERT_TRUE(std::regex_search(svg, m, marker));
    const double x = std::stod(m[1].str());
    const auto& report = art.scenarios[i].detection.report;
    EXPECT_EQ(x, *report.t_d);
    // The plotted series cross exactly at the marker: below just before, above just after.
    const auto& res = art.scenarios[i].detection.residual;
    const std::size_t k = static_cast<std::size_t>(std::lround(*report.t_d_sample / c.dt));
    EXPECT_GT(std::abs(res.residuals[k]), art.threshold(res.times[k]));
    EXPECT_LE(std::abs(res.residuals[k - 1]), art.threshold(res.times[k - 1]));
    EXPECT_LE(res.times[k - 1] - 1e-4, x);
    EXPECT_GE(res.times[k] + 1e-4, x);
  }
  fs::remove_all(c.output_dir);
}

TEST(RunExperiment, FairnessSharedMeasurements) {
  const ExperimentConfig c = small_config();
  const auto design = design_detector(c);
  const auto a = run_filters(c, design, c.initial_conditions[1], 1, 2);
  const auto b = run_filters(c, design, c.initial_conditions[1], 1, 2);
  EXPECT_EQ(a.measurements, b.measurements);
  // Replaying the first step of each Kalman-type filter on the recorded y reproduces its output.
  const DiscreteModel model = filter_model(c);
  FilterState st;
  st.xhat = c.xhat0;
  st.P = c.initial_covariance * Matrix::Identity(3, 3);
  st.phi = c.scaling.phi0;
  const Vector u0 = Vector::Constant(1, c.input()(0.0));
  const Vector y0 = Vector::Constant(1, a.measurements[0]);
  EXPECT_EQ(askf_step(st, model, c.scaling, u0, y0).xhat, a.askf[0].xhat);
  const auto cons = run_consensus(model, SensorNetwork::identical(model.Theta, model.R, 1), c.xhat0,
                                  st.P, {u0}, {{y0}});
  EXPECT_EQ(cons[0].xm, a.consensus[0].xm);
  const auto other = run_filters(c, design, c.initial_conditions[1], 1, 3);
  EXPECT_NE(a.measurements, other.measurements);
}

TEST(RunExperiment, MonteCarloStandardErrorShrinks) {
  ExperimentConfig c = small_config();
  const auto design = design_detector(c);
  std::vector<double> totals;
  for (std::size_t r = 0; r < 40; ++r) totals.push_back(total_error(run_filters(c, design, c.initial_conditions[0], 0, r)));
  auto stderr_of = [&](std::size_t n) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += totals[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (totals[i] - mean) * (totals[i] - mean);
    return std::sqrt(var / static_cast<double>(n - 1) / static_cast<double>(n));
  };
  const double ratio = stderr_of(10) / stderr_of(40);
  EXPECT_GT(ratio, 1.2);
  EXPECT_LT(ratio, 3.5);
}

TEST(CalibrateLeak, ReportsBestCandidate) {
  ExperimentConfig c;
  c.horizon = 3.0;
  const auto rep = calibrate_leak(c, {0.25, 0.5, 1.0});
  ASSERT_EQ(rep.points.size(), 3u);
  for (const auto& p : rep.points) EXPECT_LE(rep.best.max_deviation, p.max_deviation);
  EXPECT_EQ(rep.configured_deviation, rep.points[1].max_deviation);
  EXPECT_LE(rep.configured_deviation, 0.02);
  // Larger leaks are caught sooner.
  EXPECT_GT(*rep.points[0].detection_times[0], *rep.points[2].detection_times[0]);
}

TEST(Svg, RenderBasics) {
  svg::Chart chart;
  chart.title = "a < b";
  chart.series.push_back({"s", {0, 1, 2}, {1, 10, 100}, "#000", false});
  chart.markers.push_back({1.5, "m", "mark"});
  chart.log_y = true;
  const std::string out = svg::render(chart);
  EXPECT_NE(out.find("a &lt; b"), std::string::npos);
  EXPECT_NE(out.find("id=\"mark\" data-x=\"1.5\""), std::string::npos);
  EXPECT_EQ(svg::number(0.1), "0.10000000000000001");
}
