// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
//
//   kanesat_acceptance [--config strawman.json] [--expect-fail N ...]
//
// Exit status is 0 when the set of failing criteria equals the expected set.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "CLI11.hpp"

#include "kanesat/cli.hpp"
#include "kanesat/control.hpp"
#include "kanesat/errors.hpp"
#include "kanesat/linearize.hpp"
#include "kanesat/report.hpp"
#include "kanesat/scenario.hpp"
#include "kanesat/simulate.hpp"
#include "oracle/ackermann.hpp"
#include "planar_case.hpp"

namespace {

using namespace kanesat;
using Clock = std::chrono::steady_clock;
using cd = std::complex<double>;

// Pinned tolerances.
constexpr double kTolA = 1e-8;
constexpr double kTolBZeroRows = 1e-10;
constexpr double kTolBSym = 1e-8;
constexpr double kTolBInvL = 1e-8;
constexpr double kTolA1Seconds = 1.0;
constexpr double kTolDriftMomentum = 1e-6;
constexpr double kTolDriftEnergy = 1e-6;
constexpr double kTolConservationSeconds = 30.0;
constexpr double kTolOracle = 1e-9;
constexpr double kTolBlockSolve = 1e-12;
constexpr double kTolCare = 1e-8;
constexpr double kTolRegulation = 1e-3;
constexpr double kTolPoles = 1e-6;
constexpr double kTolImagGain = 1e-10;
constexpr double kTolAckermann = 1e-8;
constexpr double kTolLinearMatch = 1e-6;
constexpr double kInitialError = 1e-4;
constexpr double kTolEnergyMetric = 1e-6;
constexpr double kToneHz = 0.45;
constexpr double kTolToneHz = 0.005;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// The A matrix printed for the reference design at 90 degrees roll.
StateMatrix printed_A() {
  StateMatrix A = StateMatrix::Zero();
  A(0, 5) = 1;
  A(1, 7) = -1;
  A(2, 6) = 1;
  A(3, 8) = 1;
  A(4, 9) = 1;
  return A;
}

Outcome a_matrix(const std::string& config) {
  const auto t0 = Clock::now();
  const Scenario sc = load_scenario(config);
  const LinearModel lin = linearize(sc.require_plant(), sc.require_equilibrium());
  const double secs = seconds_since(t0);
  const double err = (lin.A - printed_A()).cwiseAbs().maxCoeff();
  return {err <= kTolA && secs < kTolA1Seconds,
          "max |A - A_printed| = " + num(err) + " (tol " + num(kTolA) + "), " + num(secs) +
              " s (limit " + num(kTolA1Seconds) + " s)"};
}

Outcome b_structure(const std::string& config) {
  const Scenario sc = load_scenario(config);
  const Equilibrium& eq = sc.require_equilibrium();
  const LinearModel lin = linearize(sc.require_plant(), eq);
  const double top = lin.B.topRows<5>().cwiseAbs().maxCoeff();
  const Eigen::Matrix<double, 5, 5> B2 = lin.B.bottomRows<5>();
  const double asym = (B2 - B2.transpose()).norm() / B2.norm();
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>>(0.5 * (B2 + B2.transpose()))
          .eigenvalues()
          .minCoeff();
  const Mat88 L = assemble_kane(sc.require_plant(), eq.state, ControlInput{}).mass_matrix;
  const Eigen::Matrix<double, 5, 5> Linv11 = L.inverse().topLeftCorner<5, 5>();
  const double dev = (B2 - Linv11).norm() / Linv11.norm();
  return {top <= kTolBZeroRows && asym <= kTolBSym && min_eig > 0.0 && dev <= kTolBInvL,
          "rows 1-5 max " + num(top) + " (tol " + num(kTolBZeroRows) + "), asymmetry " + num(asym) +
              " (tol " + num(kTolBSym) + "), min eig " + num(min_eig) + ", |B2 - inv(L)11|/|inv(L)11| " +
              num(dev) + " (tol " + num(kTolBInvL) + ")"};
}

Outcome conservation(const std::string& config) {
  const Scenario sc = load_scenario(config);
  StateVector x0 = sc.require_equilibrium().state.to_vector();
  x0.tail<5>() << 0.02, -0.01, 0.015, 0.01, -0.02;
  const auto t0 = Clock::now();
  const FreeFloatRun run =
      simulate_free_float(sc.require_plant(), x0, Vec3(0.05, -0.02, 0.01), 0.01, 1000.0, 100);
  const double secs = seconds_since(t0);
  const MomentumSummary& m0 = run.momentum.front();
  double dh = 0.0, de = 0.0, dp = 0.0;
  for (const MomentumSummary& m : run.momentum) {
    dh = std::max(dh, (m.angular_momentum - m0.angular_momentum).norm() / m0.angular_momentum.norm());
    de = std::max(de, std::abs(m.kinetic_energy - m0.kinetic_energy) / m0.kinetic_energy);
    dp = std::max(dp, (m.linear_momentum - m0.linear_momentum).norm() / m0.linear_momentum.norm());
  }
  return {dh < kTolDriftMomentum && de < kTolDriftEnergy && secs < kTolConservationSeconds,
          "1000 s at dt 0.01: angular momentum drift " + num(dh) + ", energy drift " + num(de) +
              " (tol " + num(kTolDriftEnergy) + "), linear momentum drift " + num(dp) + ", " +
              num(secs) + " s (limit " + num(kTolConservationSeconds) + " s)"};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const testing::PlanarCase pc = testing::planar_case(rng);
    const Vec8 xgd = forward_dynamics(pc.cfg, pc.state, pc.input);
    worst = std::max(worst, (xgd - pc.expected).cwiseAbs().maxCoeff());
  }
  return {worst <= kTolOracle,
          "100 planar states: max |xg' - oracle| = " + num(worst) + " (tol " + num(kTolOracle) + ")"};
}

Outcome block_solve() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Mat88 M;
    for (int k = 0; k < 64; ++k) M(k) = g(rng);
    const Mat88 L = M * M.transpose() + 0.1 * Mat88::Identity();
    Vec8 p;
    for (int k = 0; k < 8; ++k) p(k) = g(rng);
    const Vec8 dense = L.fullPivLu().solve(p);
    const BlockSolution b = block_reduced_solve(L, p);
    Vec8 red;
    red << b.rotational, b.translational;
    worst = std::max(worst, (red - dense).norm() / dense.norm());
  }
  return {worst <= kTolBlockSolve,
          "1000 SPD systems: max relative difference " + num(worst) + " (tol " + num(kTolBlockSolve) + ")"};
}

Outcome lqr_contract(const std::string& config) {
  const Scenario sc = load_scenario(config);
  const LinearModel lin = linearize(sc.require_plant(), sc.require_equilibrium());
  const GainDesign d = lqr_gain(lin.A, lin.B, *sc.lqr);
  double max_re = -1e300;
  for (Eigen::Index i = 0; i < d.closed_loop_poles.size(); ++i) {
    max_re = std::max(max_re, d.closed_loop_poles(i).real());
  }
  SimConfig sim = sc.require_sim();
  sim.K = Eigen::Matrix<double, 5, 10>(d.K);
  const PerfReport rep = oscillation_report(simulate_closed_loop(sc.require_plant(), sim), sim.target);
  return {d.riccati_residual < kTolCare && max_re < 0.0 && rep.final_error_ratio < kTolRegulation,
          "CARE residual " + num(d.riccati_residual) + " (tol " + num(kTolCare) + "), max Re " +
              num(max_re) + ", 90 deg roll final error ratio " + num(rep.final_error_ratio) +
              " (tol " + num(kTolRegulation) + ")"};
}

Outcome rpa_contract(const std::string& config) {
  const Scenario sc = load_scenario(config);
  const LinearModel lin = linearize(sc.require_plant(), sc.require_equilibrium());
  const GainDesign d = robust_pole_assignment(lin.A, lin.B, *sc.rpa);
  bool monotone = true;
  for (std::size_t i = 1; i < d.det_history.size(); ++i) {
    monotone = monotone && d.det_history[i] >= d.det_history[i - 1];
  }
  const bool improved = d.conditioning.abs_det >= d.initial_abs_det;
  const double k_imag = d.imag_gain_norm / d.K.norm();

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  double ack = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 4;
    MatrixXd A(n, n), B(n, 1);
    for (int i = 0; i < A.size(); ++i) A(i) = g(rng);
    for (int i = 0; i < B.size(); ++i) B(i) = g(rng);
    std::vector<cd> poles;
    for (int i = 0; i < n; ++i) poles.emplace_back(-1.0 - 0.5 * i, 0.0);
    if (trial % 2) {
      poles[0] = cd(-1.0, 0.7);
      poles[1] = cd(-1.0, -0.7);
    }
    const GainDesign s = robust_pole_assignment(A, B, {poles});
    const Eigen::RowVectorXd k = oracle::ackermann(A, B.col(0), poles);
    ack = std::max(ack, (s.K.row(0) - k).norm() / k.norm());
  }
  return {d.pole_error < kTolPoles && k_imag < kTolImagGain && monotone && improved && ack < kTolAckermann,
          "pole error " + num(d.pole_error) + " (tol " + num(kTolPoles) + "), |Im K|/|K| " + num(k_imag) +
              ", |det X| " + num(d.initial_abs_det) + " -> " + num(d.conditioning.abs_det) + " over " +
              std::to_string(d.sweeps) + " sweeps" + (monotone ? " (monotone)" : " (NOT monotone)") +
              ", Ackermann max rel diff " + num(ack) + " (tol " + num(kTolAckermann) + ")"};
}

// Worst relative deviation of the nonlinear loop from exp((A - BK) t) e0,
// sampled every second over 100 s. dt is small so the zero-order hold
// itself is not what is being measured.
double linear_mismatch(const ChainConfig& cfg, const StateVector& xd, const MatrixXd& K,
                       const MatrixXd& Acl, const StateVector& e0) {
  SimConfig sim;
  sim.dt = 1e-3;
  sim.duration = 100.0;
  sim.target = xd;
  sim.x0 = xd + e0;
  sim.K = Eigen::Matrix<double, 5, 10>(K);
  const Trajectory t = simulate_closed_loop(cfg, sim);
  const MatrixXd step = Acl.exp();  // one second
  VectorXd pred = e0;
  double worst = 0.0;
  for (std::size_t k = 0; k < t.size(); k += 1000) {
    worst = std::max(worst, (t.x[k] - xd - pred).norm() / e0.norm());
    pred = step * pred;
  }
  return worst;
}

Outcome linear_consistency(const std::string& config) {
  const Scenario sc = load_scenario(config);
  const ChainConfig& cfg = sc.require_plant();
  const LinearModel lin = linearize(cfg, sc.require_equilibrium());
  const StateVector xd = sc.require_equilibrium().state.to_vector();
  const std::array<GainDesign, 2> designs{lqr_gain(lin.A, lin.B, *sc.lqr),
                                          robust_pole_assignment(lin.A, lin.B, *sc.rpa)};
  std::string detail;
  bool pass = true;
  for (const GainDesign& d : designs) {
    const MatrixXd Acl = lin.A - lin.B * d.K;
    // Each coordinate direction and the uniform direction, |e0| = 1e-4.
    double worst = 0.0, best = 1e300;
    int worst_dir = 0;
    for (int dir = 0; dir <= 10; ++dir) {
      StateVector e0 = StateVector::Zero();
      if (dir < 10) {
        e0(dir) = kInitialError;
      } else {
        e0.setConstant(kInitialError / std::sqrt(10.0));
      }
      const double m = linear_mismatch(cfg, xd, d.K, Acl, e0);
      best = std::min(best, m);
      if (m > worst) {
        worst = m;
        worst_dir = dir;
      }
    }
    // Same direction at a tenth of the amplitude: a second-order remainder
    // shrinks tenfold, a modelling error would not.
    StateVector e_small = StateVector::Zero();
    if (worst_dir < 10) {
      e_small(worst_dir) = 0.1 * kInitialError;
    } else {
      e_small.setConstant(0.1 * kInitialError / std::sqrt(10.0));
    }
    const double small = linear_mismatch(cfg, xd, d.K, Acl, e_small);
    pass = pass && worst < kTolLinearMatch;
    detail += (detail.empty() ? "" : "; ") + to_string(d.method) + " worst " + num(worst) +
              " (direction " + std::to_string(worst_dir) + "), best " + num(best) + ", at 1e-5 " +
              num(small);
  }
  return {pass, detail + " (tol " + num(kTolLinearMatch) + ")"};
}

Outcome metrics() {
  Trajectory ramp;
  for (int k = 0; k <= 1000; ++k) {
    const double t = k * 1e-3;
    ramp.t.push_back(t);
    ramp.x.push_back(StateVector::Zero());
    InputVector u = InputVector::Zero();
    u(0) = t;
    ramp.u.push_back(u);
  }
  const double e = energy_metric(ramp);

  std::vector<double> s;
  const double dt = 0.1;
  for (int k = 0; k < 6000; ++k) {
    const double t = k * dt;
    s.push_back(0.3 * std::sin(2.0 * std::numbers::pi * kToneHz * t + 0.4) + 0.002 * t +
                0.5 * std::exp(-t / 40.0));
  }
  const SpectralPeak p = spectral_peak(s, dt);
  return {std::abs(e - 0.5) <= kTolEnergyMetric && p.found && std::abs(p.frequency - kToneHz) <= kTolToneHz,
          "ramp energy " + num(e) + " (0.5 +/- " + num(kTolEnergyMetric) + "), tone found at " +
              num(p.frequency) + " Hz (0.45 +/- " + num(kTolToneHz) + ")"};
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& config) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "kanesat_acceptance_compare";
  fs::create_directories(dir);
  std::ostringstream out, err;
  const std::string a = (dir / "run1.json").string(), b = (dir / "run2.json").string();
  const int rc1 = cli::cmd_compare(config, a, out, err);
  const int rc2 = cli::cmd_compare(config, b, out, err);
  const std::string ra = slurp(a), rb = slurp(b);
  const bool hash_ok = read_report(a).at("config_hash") == fnv1a_hex(slurp(config));
  fs::remove_all(dir);
  return {rc1 == 0 && rc2 == 0 && !ra.empty() && ra == rb && hash_ok,
          "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2) + ", " +
              std::to_string(ra.size()) + "-byte reports " + (ra == rb ? "identical" : "DIFFER") +
              ", config hash " + (hash_ok ? "matches" : "MISMATCH") + err.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string config = KANESAT_STRAWMAN;
  std::vector<int> expect_fail;
  app.add_option("--config", config, "Shipped strawman scenario");
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A-matrix reproduction", [&] { return a_matrix(config); }},
      {"B structure", [&] { return b_structure(config); }},
      {"free-float conservation", [&] { return conservation(config); }},
      {"planar oracle equivalence", [] { return oracle_equivalence(); }},
      {"block-solve identity", [] { return block_solve(); }},
      {"LQR contract", [&] { return lqr_contract(config); }},
      {"RPA contract", [&] { return rpa_contract(config); }},
      {"linear/nonlinear consistency", [&] { return linear_consistency(config); }},
      {"metric correctness", [] { return metrics(); }},
      {"pipeline determinism", [&] { return determinism(config); }},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("%s %2d %s | %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  std::printf("%zu/%zu criteria pass\n", criteria.size() - failed.size(), criteria.size());
  if (failed != expected) {
    std::printf("failing set differs from the expected set\n");
    return 1;
  }
  return 0;
}
