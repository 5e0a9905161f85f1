#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kanesat/cli.hpp"
#include "kanesat/control.hpp"
#include "kanesat/errors.hpp"
#include "kanesat/linearize.hpp"
#include "kanesat/scenario.hpp"
#include "kanesat/simulate.hpp"

namespace py = pybind11;
using namespace kanesat;

namespace {

py::dict design_dict(const GainDesign& d) {
  py::dict out;
  out["method"] = to_string(d.method);
  out["K"] = d.K;
  out["closed_loop_poles"] = d.closed_loop_poles;
  out["abs_det"] = d.conditioning.abs_det;
  out["cond2"] = d.conditioning.cond2;
  if (d.method == DesignMethod::Lqr) {
    out["P"] = d.P;
    out["riccati_residual"] = d.riccati_residual;
  } else {
    out["det_history"] = d.det_history;
    out["sweeps"] = d.sweeps;
    out["pole_error"] = d.pole_error;
  }
  return out;
}

Eigen::MatrixXd rows(const std::vector<StateVector>& v) {
  Eigen::MatrixXd m(v.size(), 10);
  for (std::size_t k = 0; k < v.size(); ++k) m.row(k) = v[k].transpose();
  return m;
}

Eigen::MatrixXd rows(const std::vector<InputVector>& v) {
  Eigen::MatrixXd m(v.size(), 5);
  for (std::size_t k = 0; k < v.size(); ++k) m.row(k) = v[k].transpose();
  return m;
}

template <class F>
py::tuple run_command(F&& f) {
  std::ostringstream out, err;
  const int code = f(out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_kanesat, m) {
  m.doc() = "Three-body spacecraft attitude dynamics, linearization and controller design.";

  auto base = py::register_exception<Error>(m, "KanesatError", PyExc_RuntimeError);
  py::register_exception<GimbalLock>(m, "GimbalLock", base.ptr());
  py::register_exception<SingularMass>(m, "SingularMass", base.ptr());
  py::register_exception<SingularBlock>(m, "SingularBlock", base.ptr());
  py::register_exception<NotStabilizable>(m, "NotStabilizable", base.ptr());
  py::register_exception<Uncontrollable>(m, "Uncontrollable", base.ptr());
  py::register_exception<Degenerate>(m, "Degenerate", base.ptr());
  py::register_exception<Diverged>(m, "Diverged", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<RigidBodyParams>(m, "RigidBodyParams")
      .def(py::init<>())
      .def_readwrite("mass", &RigidBodyParams::mass)
      .def_readwrite("inertia", &RigidBodyParams::inertia);

  py::class_<ChainConfig>(m, "ChainConfig")
      .def(py::init<>())
      .def_readwrite("spacecraft", &ChainConfig::spacecraft)
      .def_readwrite("boom", &ChainConfig::boom)
      .def_readwrite("payload", &ChainConfig::payload)
      .def_readwrite("g1_from_spacecraft", &ChainConfig::g1_from_spacecraft)
      .def_readwrite("g1_from_boom", &ChainConfig::g1_from_boom)
      .def_readwrite("g2_from_boom", &ChainConfig::g2_from_boom)
      .def_readwrite("g2_from_payload", &ChainConfig::g2_from_payload)
      .def_property(
          "gimbal1_axis", [](const ChainConfig& c) { return c.axes.gimbal1; },
          [](ChainConfig& c, const Vec3& a) { c.axes.gimbal1 = a; })
      .def_property(
          "gimbal2_axis", [](const ChainConfig& c) { return c.axes.gimbal2; },
          [](ChainConfig& c, const Vec3& a) { c.axes.gimbal2 = a; });

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("plant", &Scenario::require_plant)
      .def_property_readonly("equilibrium",
                             [](const Scenario& s) { return s.require_equilibrium().state.to_vector(); })
      .def_property_readonly("Q", [](const Scenario& s) { return s.lqr ? s.lqr->Q : MatrixXd(); })
      .def_property_readonly("R", [](const Scenario& s) { return s.lqr ? s.lqr->R : MatrixXd(); })
      .def_property_readonly("poles",
                             [](const Scenario& s) { return s.rpa ? s.rpa->poles : std::vector<std::complex<double>>{}; })
      .def_property_readonly("dt", [](const Scenario& s) { return s.require_sim().dt; })
      .def_property_readonly("duration", [](const Scenario& s) { return s.require_sim().duration; })
      .def_property_readonly("x0", [](const Scenario& s) { return s.require_sim().x0; })
      .def_readonly("hash", &Scenario::hash);

  m.def("load_scenario", [](const std::string& path) { return load_scenario(path); }, py::arg("path"));

  m.def(
      "state_derivative",
      [](const ChainConfig& c, const StateVector& x, const InputVector& u) {
        return state_derivative(c, x, u);
      },
      py::arg("cfg"), py::arg("x"), py::arg("u"));

  m.def(
      "linearize",
      [](const ChainConfig& c, const StateVector& xd) {
        const LinearModel lin = linearize(c, Equilibrium::at(AttitudeState::from_vector(xd)));
        return py::make_tuple(MatrixXd(lin.A), MatrixXd(lin.B));
      },
      py::arg("cfg"), py::arg("x_d"), "Returns (A, B) at the zero-rate state x_d.");

  m.def(
      "lqr",
      [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
        return design_dict(lqr_gain(A, B, {Q, R}));
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"));

  m.def(
      "robust_pole_assignment",
      [](const MatrixXd& A, const MatrixXd& B, const std::vector<std::complex<double>>& poles) {
        return design_dict(robust_pole_assignment(A, B, {poles}));
      },
      py::arg("A"), py::arg("B"), py::arg("poles"));

  m.def(
      "simulate",
      [](const ChainConfig& c, const StateVector& x0, const StateVector& target,
         const Eigen::Matrix<double, 5, 10>& K, double dt, double duration) {
        SimConfig sim;
        sim.dt = dt;
        sim.duration = duration;
        sim.x0 = x0;
        sim.target = target;
        sim.K = K;
        const Trajectory t = simulate_closed_loop(c, sim);
        return py::make_tuple(Eigen::Map<const VectorXd>(t.t.data(), t.t.size()).eval(), rows(t.x),
                              rows(t.u));
      },
      py::arg("cfg"), py::arg("x0"), py::arg("target"), py::arg("K"), py::arg("dt"),
      py::arg("duration"), "Returns (t, X, U) with one row per sample.");

  m.def(
      "energy_metric",
      [](const std::vector<double>& t, const Eigen::MatrixXd& U) {
        Trajectory tr;
        tr.t = t;
        for (Eigen::Index k = 0; k < U.rows(); ++k) {
          tr.x.push_back(StateVector::Zero());
          tr.u.push_back(U.row(k).transpose());
        }
        return energy_metric(tr);
      },
      py::arg("t"), py::arg("U"));

  m.def(
      "spectral_peak",
      [](const std::vector<double>& s, double dt) {
        const SpectralPeak p = spectral_peak(s, dt);
        return py::make_tuple(p.found, p.frequency, p.amplitude);
      },
      py::arg("signal"), py::arg("dt"), "Returns (found, frequency_hz, amplitude).");

  m.def("verify", [](const std::string& config) {
    return run_command([&](auto& o, auto& e) { return cli::cmd_verify(config, o, e); });
  }, py::arg("config"), "Returns (exit_code, stdout, stderr).");
  m.def("compare", [](const std::string& config, const std::string& out) {
    return run_command([&](auto& o, auto& e) { return cli::cmd_compare(config, out, o, e); });
  }, py::arg("config"), py::arg("out"), "Returns (exit_code, stdout, stderr).");
}
