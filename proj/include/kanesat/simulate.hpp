#pragma once

// Fixed-step integration of the nonlinear plant, closed-loop metrics, and a
// parameter-perturbation robustness sweep.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kanesat/dynamics.hpp"

namespace kanesat {

/// Classical RK4 step of y' = f(y).
template <class F, class V>
V rk4(const F& f, const V& y, double dt) {
  const V k1 = f(y);
  const V k2 = f(V(y + 0.5 * dt * k1));
  const V k3 = f(V(y + 0.5 * dt * k2));
  const V k4 = f(V(y + dt * k3));
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// RK4 step of the 10-state plant with u held over the step.
StateVector rk4_step(const ChainConfig& cfg, const StateVector& x, const InputVector& u,
                     double dt);

inline constexpr double kDivergenceBound = 1e6;
inline constexpr double kMaxSteps = 1e8;

struct SimConfig {
  double dt = 0.01;
  double duration = 0.0;
  StateVector x0 = StateVector::Zero();
  std::optional<Eigen::Matrix<double, 5, 10>> K;  // absent: open loop, u = 0
  StateVector target = StateVector::Zero();       // x_d

  /// Throws std::invalid_argument on dt <= 0, duration < dt, or too many steps.
  void validate() const;
  long steps() const;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<StateVector> x;
  std::vector<InputVector> u;

  std::size_t size() const { return t.size(); }
};

/// u_k = -K (x_k - x_d), x_{k+1} = rk4(x_k, u_k); records steps 0..N.
/// Throws Diverged (with the step index) when ||x|| exceeds 1e6, turns
/// non-finite, or pitch reaches the gimbal-lock guard mid-run; GimbalLock
/// only for a locked x0.
Trajectory simulate_closed_loop(const ChainConfig& cfg, const SimConfig& sim);

/// Torque-free run of the full generalized state [x; v_s] with conserved
/// quantities sampled every `record_every` steps.
struct FreeFloatRun {
  std::vector<double> t;
  std::vector<MomentumSummary> momentum;
  StateVector x_final;
  Vec3 v_final;
};

FreeFloatRun simulate_free_float(const ChainConfig& cfg, const StateVector& x0, const Vec3& v0,
                                 double dt, double duration, long record_every = 1);

/// Trapezoidal integral of ||u|| over the trajectory.
double energy_metric(const Trajectory& traj);

/// Joins b onto a; b must start at a's final time, whose duplicate sample is dropped.
Trajectory concatenate(const Trajectory& a, const Trajectory& b);

struct SpectralPeak {
  bool found = false;
  double frequency = 0.0;  // Hz
  double amplitude = 0.0;  // signal units
};

inline constexpr double kSpectralNoiseFloor = 1e-12;

/// Largest interior local maximum of the Hann-windowed spectrum of the
/// linearly detrended signal, refined by parabolic interpolation.
SpectralPeak spectral_peak(const std::vector<double>& signal, double dt);

struct StateMetrics {
  std::optional<double> settling_time;  // empty: never settles in the run
  SpectralPeak oscillation;
};

struct PerfReport {
  double energy = 0.0;
  double peak_control = 0.0;
  double final_error_ratio = 0.0;  // ||x_N - x_d|| / ||x_0 - x_d||
  std::optional<double> settling_time;  // max over states
  std::array<StateMetrics, 10> states;
};

/// Settling uses a band of 2% of |e_i(0)|, or of max |e_i| when e_i(0) = 0.
/// The oscillation window starts at the settling time (at least 64 samples).
PerfReport oscillation_report(const Trajectory& traj, const StateVector& target);

std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& e,
                                    double fraction = 0.02);

struct PerturbationSpec {
  double mass = 0.2;     // relative bound
  double inertia = 0.2;
  double offset = 0.2;
  int samples = 32;
  double regulation_ratio = 1e-3;  // final/initial error for "regulated"
};

/// Scale factors for sample k (1-based) of the 9-dimensional Halton
/// sequence (bases 2..23): per body mass, inertia, offsets.
std::array<double, 9> perturbation_scales(const PerturbationSpec& spec, int k);
ChainConfig perturbed_chain(const ChainConfig& cfg, const std::array<double, 9>& scales);

struct SweepSummary {
  int samples = 0;
  int regulated = 0;
  int diverged = 0;
  double fraction_regulated = 0.0;
  double worst_energy = 0.0;                  // over non-diverged runs
  std::optional<double> worst_settling_time;  // empty if some run never settles
};

std::vector<SweepSummary> perturbation_sweep(const ChainConfig& cfg,
                                             const std::vector<Eigen::MatrixXd>& gains,
                                             const SimConfig& base, const PerturbationSpec& spec);

inline constexpr const char* kCsvHeader =
    "t,phi,theta,psi,gamma,lambda,w1,w2,w3,sigma1,sigma2,u1,u2,u3,u4,u5";

void write_csv(std::ostream& os, const Trajectory& traj);
void write_csv(const std::string& path, const Trajectory& traj);
Trajectory read_csv(std::istream& is);
Trajectory read_csv(const std::string& path);

}  // namespace kanesat
