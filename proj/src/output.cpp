#include <fstream>
#include <string>

#include "tankfdi/experiment.hpp"
#include "tankfdi/svg.hpp"

namespace tankfdi {

namespace {

using svg::number;

constexpr const char* kHeader = "t,x1,x2,x3,y,u,f,xhat1,xhat2,xhat3,yhat,eps,eps_bar,phi\n";
constexpr const char* kColors[] = {"#1f77b4", "#2ca02c", "#9467bd"};

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << kHeader;
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

void write_detection_csv(const ScenarioResult& s, const ThresholdCurve& thr,
                         const std::filesystem::path& path) {
  auto out = open_csv(path);
  const DetectionRun& d = s.detection;
  for (std::size_t k = 0; k < d.plant.size(); ++k) {
    const double t = d.plant.times[k];
    const Vector& x = d.plant.states[k];
    const Vector& xh = d.observer.states[k];
    out << number(t) << ',' << number(x(0)) << ',' << number(x(1)) << ',' << number(x(2)) << ','
        << number(d.plant.outputs[k](0)) << ',' << number(d.plant.inputs[k](0)) << ','
        << number(d.plant.fault_flows[k]) << ',' << number(xh(0)) << ',' << number(xh(1)) << ','
        << number(xh(2)) << ',' << number(d.observer.outputs[k](0)) << ','
        << number(d.residual.residuals[k]) << ',' << number(thr(t)) << ",\n";
  }
  finish(out, path);
}

void write_filter_csv(const FilterRun& run, Estimator e, const Matrix& Theta,
                      const std::filesystem::path& path) {
  auto out = open_csv(path);
  const bool ok = !run.errors[static_cast<std::size_t>(e)];
  for (std::size_t j = 0; j < run.times.size(); ++j) {
    const Vector& x = run.truth[j];
    out << number(run.times[j]) << ',' << number(x(0)) << ',' << number(x(1)) << ','
        << number(x(2)) << ',' << number(run.measurements[j]) << ',' << number(run.inputs[j])
        << ',' << number(run.fault_flows[j]) << ',';
    if (!ok) {
      out << ",,,,,,\n";
      continue;
    }
    const Vector& xh = e == Estimator::kAskf ? run.askf[j].xhat : run.consensus[j].xm;
    const double yhat = (Theta * xh)(0);
    out << number(xh(0)) << ',' << number(xh(1)) << ',' << number(xh(2)) << ',' << number(yhat)
        << ',' << number(run.measurements[j] - yhat) << ",,";
    if (e == Estimator::kAskf) out << number(run.askf[j].phi);
    out << '\n';
  }
  finish(out, path);
}

svg::Series state_series(const std::vector<double>& t, const std::vector<Vector>& xs, int i,
                         const std::string& name, bool dashed) {
  svg::Series s;
  s.name = name;
  s.x = t;
  s.color = kColors[i];
  s.dashed = dashed;
  s.y.reserve(xs.size());
  for (const auto& x : xs) s.y.push_back(x(i));
  return s;
}

}  // namespace

std::vector<std::filesystem::path> emit_csv(const RunArtifacts& art,
                                            const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  const Matrix Theta = build_healthy(art.config.plant).C;
  for (std::size_t i = 0; i < art.scenarios.size(); ++i) {
    const auto& s = art.scenarios[i];
    const std::string tag = std::to_string(i + 1);
    paths.push_back(dir / ("scenario_" + tag + ".csv"));
    write_detection_csv(s, art.threshold, paths.back());
    for (Estimator e : {Estimator::kAskf, Estimator::kConsensus}) {
      paths.push_back(dir / (std::string(estimator_name(e)) + "_" + tag + ".csv"));
      write_filter_csv(s.first_repetition, e, Theta, paths.back());
    }
  }
  return paths;
}

std::vector<std::filesystem::path> emit_plots(const RunArtifacts& art,
                                              const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < art.scenarios.size(); ++i) {
    const auto& s = art.scenarios[i];
    const std::string tag = std::to_string(i + 1);
    const DetectionRun& d = s.detection;
    const FilterRun& f = s.first_repetition;

    svg::Chart states;
    states.title = "Tank levels, scenario " + tag;
    states.y_label = "level";
    for (int k = 0; k < 3; ++k) {
      states.series.push_back(
          state_series(d.plant.times, d.plant.states, k, "x" + std::to_string(k + 1), false));
    }
    states.markers.push_back({art.config.fault.t_f, "fault", "fault-onset"});
    paths.push_back(dir / ("states_" + tag + ".svg"));
    svg::write(states, paths.back());

    for (Estimator e : kEstimators) {
      const auto idx = static_cast<std::size_t>(e);
      svg::Chart chart;
      chart.title = std::string("Truth vs ") + estimator_name(e) + " estimate, scenario " + tag;
      chart.y_label = "level";
      std::vector<Vector> est;
      if (!f.errors[idx]) {
        for (std::size_t j = 0; j < f.times.size(); ++j) {
          est.push_back(e == Estimator::kLuenberger ? f.luenberger[j]
                        : e == Estimator::kAskf     ? f.askf[j].xhat
                                                    : f.consensus[j].xm);
        }
      } else {
        chart.title += " (failed: " + *f.errors[idx] + ")";
      }
      for (int k = 0; k < 3; ++k) {
        chart.series.push_back(
            state_series(f.times, f.truth, k, "x" + std::to_string(k + 1), false));
        if (!est.empty()) {
          chart.series.push_back(
              state_series(f.times, est, k, "xhat" + std::to_string(k + 1), true));
        }
      }
      paths.push_back(dir / (std::string("estimates_") + estimator_name(e) + "_" + tag + ".svg"));
      svg::write(chart, paths.back());
    }

    svg::Chart res;
    res.title = "Residual vs threshold, scenario " + tag;
    res.y_label = "|eps|";
    res.log_y = true;
    svg::Series abs_eps{"|eps|", d.residual.times, {}, kColors[0], false};
    svg::Series bound{"eps_bar", d.residual.times, {}, "#ff7f0e", true};
    for (std::size_t k = 0; k < d.residual.times.size(); ++k) {
      abs_eps.y.push_back(std::abs(d.residual.residuals[k]));
      bound.y.push_back(art.threshold(d.residual.times[k]));
    }
    res.series = {abs_eps, bound};
    if (d.report.t_d) res.markers.push_back({*d.report.t_d, "t_d = " + number(*d.report.t_d), "td"});
    paths.push_back(dir / ("residual_" + tag + ".svg"));
    svg::write(res, paths.back());
  }
  return paths;
}

}  // namespace tankfdi
