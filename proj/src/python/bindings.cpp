#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tankfdi/analysis.hpp"
#include "tankfdi/askf.hpp"
#include "tankfdi/config.hpp"
#include "tankfdi/consensus.hpp"
#include "tankfdi/detect.hpp"
#include "tankfdi/experiment.hpp"
#include "tankfdi/observer.hpp"

namespace py = pybind11;
using namespace tankfdi;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix stack(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
  return m;
}

std::vector<Vector> unstack(const RowMatrix& m) {
  std::vector<Vector> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.emplace_back(m.row(i).transpose());
  return rows;
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::dict d;
  d["t"] = tr.times;
  d["x"] = stack(tr.states);
  d["y"] = stack(tr.outputs);
  d["u"] = stack(tr.inputs);
  d["f"] = tr.fault_flows;
  return d;
}

py::dict report_dict(const DetectionReport& r) {
  py::dict d;
  d["detected"] = r.detected;
  d["t_d"] = r.t_d;
  d["t_d_sample"] = r.t_d_sample;
  d["t_d_exact"] = r.t_d_exact;
  d["t_f"] = r.t_f_configured;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Three-tank leak detection: observer design, adaptive and consensus Kalman filters.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<TankParams>(m, "TankParams")
      .def(py::init<>())
      .def(py::init([](std::array<double, 3> psi, std::array<double, 3> delta, double delta_bar) {
             return TankParams{psi, delta, delta_bar};
           }),
           py::arg("psi"), py::arg("delta"), py::arg("delta_bar") = 0.0)
      .def_readwrite("psi", &TankParams::psi)
      .def_readwrite("delta", &TankParams::delta)
      .def_readwrite("delta_bar", &TankParams::delta_bar)
      .def("__repr__", [](const TankParams& p) {
        return "TankParams(psi=" + py::repr(py::cast(p.psi)).cast<std::string>() +
               ", delta=" + py::repr(py::cast(p.delta)).cast<std::string>() +
               ", delta_bar=" + std::to_string(p.delta_bar) + ")";
      });

  py::class_<StateSpace>(m, "StateSpace")
      .def(py::init<Matrix, Matrix, Matrix, Matrix>(), py::arg("A"), py::arg("B"), py::arg("C"),
           py::arg("F"))
      .def_readwrite("A", &StateSpace::A)
      .def_readwrite("B", &StateSpace::B)
      .def_readwrite("C", &StateSpace::C)
      .def_readwrite("F", &StateSpace::F);

  m.def("build_healthy", &build_healthy, py::arg("params") = TankParams{});
  m.def("build_faulty", &build_faulty, py::arg("params"));
  m.def("steady_state", &steady_state, py::arg("ss"), py::arg("u"));
  m.def("discretize_zoh",
        [](const Matrix& A, const Matrix& B, double ts) {
          const auto d = discretize_zoh(A, B, ts);
          return py::make_tuple(d.Ad, d.Bd);
        },
        py::arg("A"), py::arg("B"), py::arg("ts"));

  m.def("simulate",
        [](const TankParams& params, std::vector<double> breakpoints, std::vector<double> values,
           const Vector& x0, double dt, double horizon, double t_f, double delta_bar) {
          return trajectory_dict(simulate(params, PiecewiseConstantSignal(breakpoints, values),
                                          {t_f, delta_bar}, x0, dt, horizon));
        },
        py::arg("params"), py::arg("breakpoints"), py::arg("values"), py::arg("x0"),
        py::arg("dt") = 1e-3, py::arg("horizon") = 10.0, py::arg("t_f") = 2.0,
        py::arg("delta_bar") = 0.0,
        "Piecewise-constant input given by breakpoints and values; returns arrays t, x, y, u, f.");

  m.def("characteristic_polynomial",
        [](const Matrix& a) { return characteristic_polynomial(a).coefficients; }, py::arg("M"));
  m.def("eigenvalues", &eigenvalues, py::arg("M"));
  m.def("transfer_function",
        [](const StateSpace& ss) {
          const auto tf = transfer_function(ss);
          return py::make_tuple(tf.numerator.trimmed().coefficients, tf.denominator.coefficients);
        },
        py::arg("ss"), "Returns (numerator, denominator) coefficients, highest power first.");
  m.def("controllability_matrix",
        [](const StateSpace& ss) {
          const auto r = controllability_matrix(ss);
          return py::make_tuple(r.matrix, r.rank);
        },
        py::arg("ss"));
  m.def("observability_matrix",
        [](const StateSpace& ss) {
          const auto r = observability_matrix(ss);
          return py::make_tuple(r.matrix, r.rank);
        },
        py::arg("ss"));
  m.def("is_asymptotically_stable", &is_asymptotically_stable, py::arg("ss"),
        py::arg("tolerance") = 1e-12);

  m.def("place_observer_poles",
        [](const StateSpace& ss, const std::vector<std::complex<double>>& poles) {
          const auto d = place_observer_poles(ss, poles);
          py::dict out;
          out["Psi_o"] = d.Psi_o;
          out["Psi"] = d.Psi;
          out["Gamma_d"] = d.Gamma_d;
          out["Delta"] = d.canonical.Delta;
          out["A_o"] = d.canonical.A_o;
          return out;
        },
        py::arg("ss"), py::arg("poles"));

  py::class_<Mode>(m, "Mode")
      .def_readonly("coefficient", &Mode::coefficient)
      .def_readonly("pole", &Mode::pole);
  py::enum_<ThresholdKind>(m, "ThresholdKind")
      .value("modal", ThresholdKind::kModal)
      .value("box", ThresholdKind::kBox);
  py::class_<ThresholdCurve>(m, "ThresholdCurve")
      .def_readonly("modes", &ThresholdCurve::modes)
      .def_readonly("signed_modes", &ThresholdCurve::signed_modes)
      .def_readonly("sampled", &ThresholdCurve::sampled)
      .def_readonly("floor", &ThresholdCurve::floor)
      .def("__call__", &ThresholdCurve::operator(), py::arg("t"))
      .def("signed_value", &ThresholdCurve::signed_value, py::arg("t"));
  m.def("build_threshold", &build_threshold, py::arg("Gamma_d"), py::arg("C"), py::arg("e_hat"),
        py::arg("kind") = ThresholdKind::kModal, py::arg("floor") = 0.0,
        py::arg("fallback_horizon") = 20.0, py::arg("fallback_dt") = 1e-3);
  m.def("initial_error_bound", &initial_error_bound, py::arg("x_lo"), py::arg("x_hi"),
        py::arg("xhat0"));

  py::class_<ScalingParams>(m, "ScalingParams")
      .def(py::init([](double a, double b, double c, double phi0) {
             return ScalingParams{a, b, c, phi0};
           }),
           py::arg("a") = 0.5, py::arg("b") = 0.5 - 1e-15, py::arg("c") = 1e-15,
           py::arg("phi0") = 1.0)
      .def_readwrite("a", &ScalingParams::a)
      .def_readwrite("b", &ScalingParams::b)
      .def_readwrite("c", &ScalingParams::c)
      .def_readwrite("phi0", &ScalingParams::phi0);

  m.def("run_askf",
        [](const Matrix& A, const Matrix& B, const Matrix& Theta, const Matrix& Q, const Matrix& R,
           const ScalingParams& params, const Vector& x0, const Matrix& P0, const RowMatrix& u,
           const RowMatrix& y) {
          const auto states = run_askf({A, B, Theta, Q, R}, params, x0, P0, unstack(u), unstack(y));
          std::vector<Vector> xs;
          std::vector<double> phi;
          for (const auto& s : states) {
            xs.push_back(s.xhat);
            phi.push_back(s.phi);
          }
          py::dict out;
          out["xhat"] = stack(xs);
          out["phi"] = phi;
          return out;
        },
        py::arg("A"), py::arg("B"), py::arg("Theta"), py::arg("Q"), py::arg("R"), py::arg("params"),
        py::arg("x0"), py::arg("P0"), py::arg("u"), py::arg("y"),
        "u and y hold one sample per row; row k of u drives the state into sample k.");

  m.def("run_consensus",
        [](const Matrix& A, const Matrix& B, const Matrix& Theta, const Matrix& Q, const Matrix& R,
           std::size_t sensors, const Vector& x0, const Matrix& P0, const RowMatrix& u,
           const RowMatrix& y) {
          std::vector<std::vector<Vector>> ys;
          for (const auto& row : unstack(y)) ys.emplace_back(sensors, row);
          const auto states = run_consensus({A, B, Theta, Q, R}, SensorNetwork::identical(Theta, R, sensors),
                                            x0, P0, unstack(u), ys);
          std::vector<Vector> xs;
          for (const auto& s : states) xs.push_back(s.xm);
          return stack(xs);
        },
        py::arg("A"), py::arg("B"), py::arg("Theta"), py::arg("Q"), py::arg("R"),
        py::arg("sensors"), py::arg("x0"), py::arg("P0"), py::arg("u"), py::arg("y"),
        "Identical sensors all reading y; returns posterior means, one row per sample.");

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("plant", &ExperimentConfig::plant)
      .def_property(
          "delta_bar", [](const ExperimentConfig& c) { return c.fault.delta_bar; },
          [](ExperimentConfig& c, double v) { c.fault.delta_bar = v; })
      .def_property(
          "t_f", [](const ExperimentConfig& c) { return c.fault.t_f; },
          [](ExperimentConfig& c, double v) { c.fault.t_f = v; })
      .def_readwrite("poles", &ExperimentConfig::poles)
      .def_readwrite("threshold", &ExperimentConfig::threshold)
      .def_readwrite("residual_floor", &ExperimentConfig::residual_floor)
      .def_readwrite("scaling", &ExperimentConfig::scaling)
      .def_readwrite("sensors", &ExperimentConfig::sensors)
      .def_readwrite("dt", &ExperimentConfig::dt)
      .def_readwrite("horizon", &ExperimentConfig::horizon)
      .def_readwrite("sample_period", &ExperimentConfig::sample_period)
      .def_readwrite("process_noise", &ExperimentConfig::process_noise)
      .def_readwrite("measurement_noise", &ExperimentConfig::measurement_noise)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("monte_carlo", &ExperimentConfig::monte_carlo)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def_readwrite("initial_conditions", &ExperimentConfig::initial_conditions)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def("validate", &ExperimentConfig::validate)
      .def("to_text", &to_config_text);

  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
  m.def("load_config", &load_config, py::arg("path"));

  m.def("detect_scenarios",
        [](const ExperimentConfig& cfg) {
          py::list out;
          for (const auto& r : detect_scenarios(cfg)) out.append(report_dict(r));
          return out;
        },
        py::arg("config"));

  m.def("run_experiment",
        [](const ExperimentConfig& cfg, bool write_outputs) {
          RunArtifacts art;
          {
            py::gil_scoped_release release;
            art = run_experiment(cfg, write_outputs);
          }
          py::dict out;
          py::list detections, mse;
          for (const auto& s : art.scenarios) {
            detections.append(report_dict(s.detection.report));
            py::dict row;
            for (Estimator e : kEstimators) {
              const auto& entry = s.mse[static_cast<std::size_t>(e)];
              py::dict d;
              d["per_state"] = entry.per_state;
              d["total"] = entry.total;
              d["repetitions"] = entry.repetitions;
              d["error"] = entry.error;
              row[estimator_name(e)] = d;
            }
            mse.append(row);
          }
          py::dict aggregate;
          for (Estimator e : kEstimators) aggregate[estimator_name(e)] = art.aggregate_mse(e);
          out["detections"] = detections;
          out["mse"] = mse;
          out["aggregate_mse"] = aggregate;
          out["csv_paths"] = art.csv_paths;
          out["plot_paths"] = art.plot_paths;
          return out;
        },
        py::arg("config"), py::arg("write_outputs") = false);
}
