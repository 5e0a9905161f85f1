#include "kanesat/cli.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <typeinfo>

#include <spdlog/spdlog.h>

#include "kanesat/errors.hpp"
#include "kanesat/report.hpp"
#include "kanesat/scenario.hpp"

namespace kanesat::cli {
namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string error_name(const std::exception& e) {
  if (dynamic_cast<const GimbalLock*>(&e)) return "GimbalLock";
  if (dynamic_cast<const SingularMass*>(&e)) return "SingularMass";
  if (dynamic_cast<const SingularBlock*>(&e)) return "SingularBlock";
  if (dynamic_cast<const InvalidRotation*>(&e)) return "InvalidRotation";
  if (dynamic_cast<const NotEquilibrium*>(&e)) return "NotEquilibrium";
  if (dynamic_cast<const NotStabilizable*>(&e)) return "NotStabilizable";
  if (dynamic_cast<const Uncontrollable*>(&e)) return "Uncontrollable";
  if (dynamic_cast<const Degenerate*>(&e)) return "Degenerate";
  if (dynamic_cast<const Diverged*>(&e)) return "Diverged";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  return "Error";
}

// Maps library failures onto the documented exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << '\n';
    return kConfigError;
  } catch (const Uncontrollable& e) {
    err << "error: Uncontrollable (pole index " << e.pole_index() << "): " << e.what() << '\n';
    return kDesignError;
  } catch (const Diverged& e) {
    err << "error: Diverged at step " << e.step() << ": " << e.what() << '\n';
    return kDiverged;
  } catch (const NotStabilizable& e) {
    err << "error: NotStabilizable: " << e.what() << '\n';
    return kDesignError;
  } catch (const Degenerate& e) {
    err << "error: Degenerate: " << e.what() << '\n';
    return kDesignError;
  } catch (const Error& e) {
    err << "error: " << error_name(e) << ": " << e.what() << '\n';
    return kPlantError;
  } catch (const std::invalid_argument& e) {
    err << "error: config: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "error: malformed report: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

LinearModel plant_model(const Scenario& sc) {
  spdlog::debug("linearizing at the configured equilibrium");
  return linearize(sc.require_plant(), sc.require_equilibrium());
}

GainDesign design_one(DesignMethod method, const Scenario& sc, const MatrixXd& A,
                      const MatrixXd& B) {
  if (method == DesignMethod::Lqr) {
    if (!sc.lqr) throw ConfigError("lqr section required for an LQR design", "lqr");
    spdlog::debug("solving the Riccati equation");
    return lqr_gain(A, B, *sc.lqr);
  }
  if (!sc.rpa) throw ConfigError("rpa section required for a pole-assignment design", "rpa");
  spdlog::debug("running robust pole assignment");
  return robust_pole_assignment(A, B, *sc.rpa);
}

void print_design(std::ostream& out, const GainDesign& d) {
  double max_re = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d.closed_loop_poles.size(); ++i) {
    max_re = std::max(max_re, d.closed_loop_poles(i).real());
  }
  out << to_string(d.method) << ": max Re(pole) " << fmt_num(max_re) << ", |det X| "
      << fmt_num(d.conditioning.abs_det) << ", cond(X) " << fmt_num(d.conditioning.cond2);
  if (d.method == DesignMethod::Lqr) {
    out << ", Riccati residual " << fmt_num(d.riccati_residual);
  } else {
    out << ", pole error " << fmt_num(d.pole_error) << ", sweeps " << d.sweeps;
  }
  out << '\n';
}

json state_to_json(const StateVector& x) {
  json a = json::array();
  for (int i = 0; i < 10; ++i) a.push_back(x(i));
  return a;
}

json sim_to_json(const SimConfig& s) {
  return {{"dt", s.dt},
          {"duration", s.duration},
          {"steps", s.steps()},
          {"x0", state_to_json(s.x0)},
          {"target", state_to_json(s.target)}};
}

void print_perf(std::ostream& out, const std::string& label, const PerfReport& r) {
  out << label << ": energy " << fmt_num(r.energy) << ", peak |u| " << fmt_num(r.peak_control)
      << ", final error ratio " << fmt_num(r.final_error_ratio) << ", settling "
      << (r.settling_time ? fmt_num(*r.settling_time) + " s" : std::string("not reached"))
      << '\n';
}

// ---- verify -------------------------------------------------------------

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

Mat88 mass_matrix_unchecked(const ChainConfig& cfg, const AttitudeState& s) {
  const Mat98 Om = partial_rate_dyad(cfg, s);
  const Mat98 V = partial_velocity_dyad(cfg, s);
  Eigen::Matrix<double, 9, 9> J = Eigen::Matrix<double, 9, 9>::Zero();
  J.block<3, 3>(0, 0) = cfg.spacecraft.inertia;
  J.block<3, 3>(3, 3) = cfg.boom.inertia;
  J.block<3, 3>(6, 6) = cfg.payload.inertia;
  Vec9 m;
  m << Vec3::Constant(cfg.spacecraft.mass), Vec3::Constant(cfg.boom.mass),
      Vec3::Constant(cfg.payload.mass);
  return Om.transpose() * J * Om + V.transpose() * m.asDiagonal() * V;
}

std::vector<AttitudeState> probe_states(const Equilibrium& eq) {
  std::vector<AttitudeState> states{eq.state};
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> angle(-1.0, 1.0), rate(-0.05, 0.05);
  for (int k = 0; k < 4; ++k) {
    AttitudeState s;
    s.euler = {angle(rng) * 3.0, angle(rng) * 1.2, angle(rng) * 3.0};
    s.gamma = angle(rng);
    s.lambda = angle(rng);
    s.omega = {rate(rng), rate(rng), rate(rng)};
    s.sigma1 = rate(rng);
    s.sigma2 = rate(rng);
    states.push_back(s);
  }
  return states;
}

Check run_check(const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
  try {
    const auto [ok, detail] = f();
    return {name, ok, detail};
  } catch (const std::exception& e) {
    return {name, false, error_name(e) + ": " + e.what()};
  }
}

std::vector<Check> verify_checks(const ChainConfig& cfg, const Equilibrium& eq) {
  const std::array<std::pair<const char*, const RigidBodyParams*>, 3> bodies{
      {{"spacecraft", &cfg.spacecraft}, {"boom", &cfg.boom}, {"payload", &cfg.payload}}};
  const auto per_body = [&](auto&& ok) {
    std::string bad;
    for (const auto& [name, b] : bodies) {
      if (!ok(*b)) bad += (bad.empty() ? "" : ", ") + std::string(name);
    }
    return std::make_pair(bad.empty(), bad.empty() ? std::string("all bodies") : "violated by " + bad);
  };
  const std::vector<AttitudeState> probes = probe_states(eq);

  std::vector<Check> checks;
  checks.push_back(run_check("mass positive", [&] {
    return per_body([](const RigidBodyParams& b) { return b.mass > 0.0; });
  }));
  checks.push_back(run_check("inertia symmetry", [&] {
    return per_body([](const RigidBodyParams& b) { return is_symmetric(b.inertia); });
  }));
  checks.push_back(run_check("inertia positive definite", [&] {
    return per_body([](const RigidBodyParams& b) {
      return is_symmetric(b.inertia) && is_positive_definite(b.inertia);
    });
  }));
  checks.push_back(run_check("axes unit", [&] {
    const double e = std::max(std::abs(cfg.axes.gimbal1.norm() - 1.0),
                              std::abs(cfg.axes.gimbal2.norm() - 1.0));
    return std::make_pair(e < 1e-9, "max | |a| - 1 | = " + fmt_num(e));
  }));
  checks.push_back(run_check("L symmetric", [&] {
    double worst = 0.0;
    for (const auto& s : probes) {
      const Mat88 L = mass_matrix_unchecked(cfg, s);
      worst = std::max(worst, (L - L.transpose()).norm() / L.norm());
    }
    return std::make_pair(worst < 1e-12, "max relative asymmetry " + fmt_num(worst));
  }));
  checks.push_back(run_check("L positive definite", [&] {
    // A body with zero mass or a singular inertia contributes a singular
    // block to the system mass matrix, so definiteness is required per body.
    for (const auto& [name, b] : bodies) {
      if (!(b->mass > 0.0)) return std::make_pair(false, std::string(name) + " mass is not positive");
      if (!is_positive_definite(0.5 * (b->inertia + b->inertia.transpose()))) {
        return std::make_pair(false, std::string(name) + " inertia is not positive definite");
      }
    }
    double min_eig = std::numeric_limits<double>::infinity();
    for (const auto& s : probes) {
      const Mat88 L = mass_matrix_unchecked(cfg, s);
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat88>(0.5 * (L + L.transpose()))
                                      .eigenvalues()
                                      .minCoeff());
    }
    return std::make_pair(min_eig > 0.0, "min eigenvalue over probes " + fmt_num(min_eig));
  }));
  checks.push_back(run_check("equilibrium residual", [&] {
    const double r = find_equilibrium_residual(cfg, eq.state);
    return std::make_pair(r < 1e-9, "||f(x_d, 0)||_inf = " + fmt_num(r));
  }));

  std::optional<LinearModel> lin;
  checks.push_back(run_check("A structure", [&] {
    lin = linearize(cfg, eq);
    // Rates enter only through the Euler kinematics and the gimbal angles;
    // at zero rates nothing feeds back into the accelerations.
    StateMatrix expected = StateMatrix::Zero();
    for (int i = 0; i < 3; ++i) {
      expected.block<3, 1>(0, 5 + i) = euler_rates(eq.state.euler, Vec3::Unit(i));
    }
    expected(3, 8) = 1.0;
    expected(4, 9) = 1.0;
    const double e = (lin->A - expected).cwiseAbs().maxCoeff();
    return std::make_pair(e < 1e-8, "max |A - A_expected| = " + fmt_num(e));
  }));
  checks.push_back(run_check("B structure", [&] {
    if (!lin) lin = linearize(cfg, eq);
    const InputMatrix& B = lin->B;
    const double top = B.topRows<5>().cwiseAbs().maxCoeff();
    const Eigen::Matrix<double, 5, 5> Bb = B.bottomRows<5>();
    const double asym = (Bb - Bb.transpose()).norm() / Bb.norm();
    const Mat88 Linv = mass_matrix_unchecked(cfg, eq.state).inverse();
    const double dev = (Bb - Linv.topLeftCorner<5, 5>()).norm() / Bb.norm();
    const bool pd = Eigen::LLT<Eigen::Matrix<double, 5, 5>>(0.5 * (Bb + Bb.transpose())).info() ==
                    Eigen::Success;
    const bool ok = top < 1e-10 && asym < 1e-8 && dev < 1e-8 && pd;
    return std::make_pair(ok, "top rows " + fmt_num(top) + ", asymmetry " + fmt_num(asym) +
                                  ", |B2 - inv(L)11| " + fmt_num(dev) +
                                  (pd ? ", positive definite" : ", not positive definite"));
  }));
  checks.push_back(run_check("block-solve identity", [&] {
    double worst = 0.0;
    for (const auto& s : probes) {
      const KaneSystem ks = assemble_kane(cfg, s, ControlInput{});
      const Vec8 dense = ks.mass_matrix.llt().solve(ks.rhs());
      const BlockSolution b = block_reduced_solve(ks.mass_matrix, ks.rhs());
      Vec8 red;
      red << b.rotational, b.translational;
      worst = std::max(worst, (red - dense).norm() / std::max(dense.norm(), 1e-300));
    }
    return std::make_pair(worst < 1e-12, "max relative difference " + fmt_num(worst));
  }));
  checks.push_back(run_check("conservation", [&] {
    StateVector x0 = eq.state.to_vector();
    x0.tail<5>() << 0.01, -0.02, 0.015, 0.02, -0.01;
    const FreeFloatRun run = simulate_free_float(cfg, x0, Vec3(0.05, -0.02, 0.01), 0.01, 100.0, 100);
    const MomentumSummary& m0 = run.momentum.front();
    double dh = 0.0, dp = 0.0, de = 0.0;
    for (const auto& m : run.momentum) {
      dh = std::max(dh, (m.angular_momentum - m0.angular_momentum).norm() / m0.angular_momentum.norm());
      dp = std::max(dp, (m.linear_momentum - m0.linear_momentum).norm() / m0.linear_momentum.norm());
      de = std::max(de, std::abs(m.kinetic_energy - m0.kinetic_energy) / m0.kinetic_energy);
    }
    const bool ok = dh < 1e-8 && dp < 1e-8 && de < 1e-6;
    return std::make_pair(ok, "100 s drift: angular " + fmt_num(dh) + ", linear " + fmt_num(dp) +
                                  ", energy " + fmt_num(de));
  }));
  checks.push_back(run_check("power balance", [&] {
    // Kinetic energy gained under a constant input equals the work of the
    // bus torque and the two gimbal torques.
    using Vec13 = Eigen::Matrix<double, 13, 1>;
    InputVector u;
    u << 0.3, -0.2, 0.1, 0.05, -0.04;
    Vec13 y;
    y << eq.state.to_vector(), Vec3::Zero();
    y.segment<5>(5) << 0.01, -0.005, 0.008, 0.004, -0.006;
    const ControlInput cu = ControlInput::from_vector(u);
    const auto power = [&](const Vec13& z) {
      const StateVector x = z.head<10>();
      return u.head<3>().dot(x.segment<3>(5)) + u(3) * x(8) + u(4) * x(9);
    };
    const auto energy = [&](const Vec13& z) {
      return system_momentum(cfg, AttitudeState::from_vector(z.head<10>()), z.tail<3>())
          .kinetic_energy;
    };
    const auto f = [&](const Vec13& z) {
      Vec13 dz;
      const StateVector x = z.head<10>();
      dz.head<10>() = state_derivative(cfg, x, u);
      dz.tail<3>() = forward_dynamics(cfg, AttitudeState::from_vector(x), cu).tail<3>();
      return dz;
    };
    const double dt = 0.01;
    const int n = 1000;  // even, for Simpson's rule
    double work = 0.0;
    const double e0 = energy(y);
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      work += w * power(y);
      if (k < n) y = rk4(f, y, dt);
    }
    work *= dt / 3.0;
    const double gain = energy(y) - e0;
    const double rel = std::abs(gain - work) / std::max(std::abs(work), 1e-300);
    return std::make_pair(rel < 1e-6, "delta KE " + fmt_num(gain) + " vs work " + fmt_num(work) +
                                          " (relative " + fmt_num(rel) + ")");
  }));
  return checks;
}

// ---- compare ------------------------------------------------------------

void verdict(std::ostream& out, json& list, const std::string& metric, double lqr, double rpa,
             bool higher_is_better) {
  std::string winner;
  if (lqr == rpa || (std::isnan(lqr) && std::isnan(rpa))) {
    winner = "tie";
  } else if (std::isnan(lqr) || std::isnan(rpa)) {
    winner = std::isnan(lqr) ? "rpa" : "lqr";
  } else {
    const bool rpa_better = higher_is_better ? rpa > lqr : rpa < lqr;
    winner = rpa_better ? "rpa" : "lqr";
  }
  const std::string line = metric + ": lqr " + fmt_num(lqr) + ", rpa " + fmt_num(rpa) + " -> " +
                           (winner == "tie" ? std::string("tie")
                                            : winner + (higher_is_better ? " higher" : " lower"));
  out << "verdict " << line << '\n';
  list.push_back({{"metric", metric},
                  {"lqr", number_to_json(lqr)},
                  {"rpa", number_to_json(rpa)},
                  {"better", winner}});
}

double or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

int cmd_linearize(const std::string& config, const std::string& out_path, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = load_scenario(config);
    const LinearModel lin = plant_model(sc);
    json rep = report_header(sc.hash);
    rep["linear_model"] = to_json(lin);
    write_report(out_path, rep);
    out << "linearized: equilibrium residual " << fmt_num(lin.equilibrium_residual)
        << ", max |B| " << fmt_num(lin.B.cwiseAbs().maxCoeff()) << " -> " << out_path << '\n';
    return kOk;
  });
}

int cmd_design(const DesignOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.method != "lqr" && opts.method != "rpa" && opts.method != "both") {
      throw ConfigError("method must be lqr, rpa or both", "--method");
    }
    const Scenario sc = load_scenario(opts.config);
    json rep = report_header(sc.hash);
    MatrixXd A, B;
    if (sc.model) {
      A = sc.model->A;
      B = sc.model->B;
      rep["model"] = {{"A", matrix_to_json(A)}, {"B", matrix_to_json(B)}};
    } else {
      const LinearModel lin = plant_model(sc);
      A = lin.A;
      B = lin.B;
      rep["linear_model"] = to_json(lin);
    }
    json designs = json::object();
    for (const DesignMethod m : {DesignMethod::Lqr, DesignMethod::Rpa}) {
      if (opts.method != "both" && opts.method != to_string(m)) continue;
      const GainDesign d = design_one(m, sc, A, B);
      print_design(out, d);
      designs[to_string(m)] = to_json(d);
    }
    rep["designs"] = designs;
    write_report(opts.out, rep);
    out << "designs written to " << opts.out << '\n';
    return kOk;
  });
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = load_scenario(opts.config);
    const ChainConfig& plant = sc.require_plant();
    SimConfig sim = sc.require_sim();

    const json gains = read_report(opts.gain_file);
    if (!gains.contains("designs") || !gains.at("designs").is_object() ||
        gains.at("designs").empty()) {
      throw ConfigError(opts.gain_file + " holds no designs", "designs");
    }
    const json& designs = gains.at("designs");
    std::string method = opts.method;
    if (method.empty()) {
      if (designs.size() != 1) {
        throw ConfigError("gain file holds several designs; pass --method", "--method");
      }
      method = designs.begin().key();
    }
    if (!designs.contains(method)) {
      throw ConfigError("gain file has no '" + method + "' design", "--method");
    }
    if (gains.value("config_hash", std::string()) != sc.hash) {
      err << "warning: gain file was designed for config hash "
          << gains.value("config_hash", std::string("<none>")) << ", this config is " << sc.hash
          << '\n';
    }
    const GainDesign d = design_from_json(designs.at(method));
    if (d.K.rows() != 5 || d.K.cols() != 10) {
      throw ConfigError("gain must be 5x10 for the plant", "designs." + method + ".K");
    }
    sim.K = Eigen::Matrix<double, 5, 10>(d.K);

    const Trajectory traj = simulate_closed_loop(plant, sim);
    write_csv(opts.out_csv, traj);
    const PerfReport perf = oscillation_report(traj, sim.target);
    json rep = report_header(sc.hash);
    rep["method"] = method;
    rep["sim"] = sim_to_json(sim);
    rep["performance"] = to_json(perf);
    const std::string report_path = opts.report.empty() ? opts.out_csv + ".json" : opts.report;
    write_report(report_path, rep);
    print_perf(out, method, perf);
    out << traj.size() << " samples -> " << opts.out_csv << ", report -> " << report_path << '\n';
    return kOk;
  });
}

int cmd_compare(const std::string& config, const std::string& out_path, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = load_scenario(config);
    const ChainConfig& plant = sc.require_plant();
    const SimConfig& base = sc.require_sim();
    const LinearModel lin = plant_model(sc);

    json rep = report_header(sc.hash);
    rep["linear_model"] = to_json(lin);
    const GainDesign lqr = design_one(DesignMethod::Lqr, sc, lin.A, lin.B);
    const GainDesign rpa = design_one(DesignMethod::Rpa, sc, lin.A, lin.B);
    print_design(out, lqr);
    print_design(out, rpa);
    rep["designs"] = {{"lqr", to_json(lqr)}, {"rpa", to_json(rpa)}};

    std::array<PerfReport, 2> perf;
    const std::array<const GainDesign*, 2> gains{&lqr, &rpa};
    for (std::size_t i = 0; i < 2; ++i) {
      SimConfig sim = base;
      sim.K = Eigen::Matrix<double, 5, 10>(gains[i]->K);
      spdlog::debug("simulating the {} closed loop", to_string(gains[i]->method));
      perf[i] = oscillation_report(simulate_closed_loop(plant, sim), sim.target);
      print_perf(out, to_string(gains[i]->method), perf[i]);
    }
    rep["simulation"] = sim_to_json(base);
    rep["performance"] = {{"lqr", to_json(perf[0])}, {"rpa", to_json(perf[1])}};

    spdlog::debug("perturbation sweep with {} samples", sc.perturbation.samples);
    const std::vector<SweepSummary> sweep =
        perturbation_sweep(plant, {lqr.K, rpa.K}, base, sc.perturbation);
    rep["perturbation"] = {{"bounds",
                            {{"mass", sc.perturbation.mass},
                             {"inertia", sc.perturbation.inertia},
                             {"offset", sc.perturbation.offset}}},
                           {"samples", sc.perturbation.samples},
                           {"regulation_ratio", sc.perturbation.regulation_ratio},
                           {"lqr", to_json(sweep[0])},
                           {"rpa", to_json(sweep[1])}};
    for (std::size_t i = 0; i < 2; ++i) {
      out << to_string(gains[i]->method) << " sweep: " << sweep[i].regulated << "/"
          << sweep[i].samples << " regulated, " << sweep[i].diverged << " diverged\n";
    }

    json verdicts = json::array();
    verdict(out, verdicts, "energy", perf[0].energy, perf[1].energy, false);
    verdict(out, verdicts, "peak_control", perf[0].peak_control, perf[1].peak_control, false);
    verdict(out, verdicts, "settling_time", or_nan(perf[0].settling_time),
            or_nan(perf[1].settling_time), false);
    verdict(out, verdicts, "final_error_ratio", perf[0].final_error_ratio,
            perf[1].final_error_ratio, false);
    verdict(out, verdicts, "eigenvector_condition", lqr.conditioning.cond2,
            rpa.conditioning.cond2, false);
    verdict(out, verdicts, "fraction_regulated", sweep[0].fraction_regulated,
            sweep[1].fraction_regulated, true);
    verdict(out, verdicts, "worst_energy", sweep[0].worst_energy, sweep[1].worst_energy, false);
    rep["verdicts"] = verdicts;

    write_report(out_path, rep);
    out << "report -> " << out_path << '\n';
    return kOk;
  });
}

int cmd_verify(const std::string& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario sc = load_scenario(config, LoadMode::Lenient);
    const std::vector<Check> checks = verify_checks(sc.require_plant(), sc.require_equilibrium());
    bool all = true;
    for (const Check& c : checks) {
      out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      all = all && c.pass;
    }
    out << (all ? "all invariants hold" : "some invariants fail") << '\n';
    return all ? kOk : kVerifyFailed;
  });
}

}  // namespace kanesat::cli
