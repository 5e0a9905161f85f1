#include "kanesat/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

// FFTW backend: O(n log n) for every length, including large prime factors.
#define EIGEN_FFTW_DEFAULT
#include <unsupported/Eigen/FFT>

#include "kanesat/errors.hpp"

namespace kanesat {

StateVector rk4_step(const ChainConfig& cfg, const StateVector& x, const InputVector& u,
                     double dt) {
  const auto f = [&](const StateVector& y) { return state_derivative(cfg, y, u); };
  return rk4(f, x, dt);
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("sim.dt must be positive");
  if (!(duration >= dt) || !std::isfinite(duration)) {
    throw std::invalid_argument("sim.duration must be at least sim.dt");
  }
  if (duration / dt > kMaxSteps) {
    throw std::invalid_argument("sim.duration / sim.dt exceeds 1e8 steps");
  }
}

long SimConfig::steps() const { return std::lround(duration / dt); }

namespace {

void check_bounded(const StateVector& x, long step) {
  if (!x.allFinite() || x.norm() > kDivergenceBound) {
    throw Diverged("state norm exceeded 1e6 at step " + std::to_string(step), step);
  }
}

}  // namespace

Trajectory simulate_closed_loop(const ChainConfig& cfg, const SimConfig& sim) {
  sim.validate();
  const long n = sim.steps();
  Trajectory traj;
  traj.t.reserve(static_cast<std::size_t>(n + 1));
  traj.x.reserve(static_cast<std::size_t>(n + 1));
  traj.u.reserve(static_cast<std::size_t>(n + 1));

  StateVector x = sim.x0;
  check_bounded(x, 0);
  euler_rates(AttitudeState::from_vector(x).euler, Vec3::Zero());  // GimbalLock at x0
  for (long k = 0;; ++k) {
    InputVector u = InputVector::Zero();
    if (sim.K) u = -(*sim.K) * (x - sim.target);
    traj.t.push_back(static_cast<double>(k) * sim.dt);
    traj.x.push_back(x);
    traj.u.push_back(u);
    if (k == n) break;
    try {
      x = rk4_step(cfg, x, u, sim.dt);
    } catch (const GimbalLock&) {
      // The run left the attitude chart: a runaway, not a bad input.
      throw Diverged("pitch reached the gimbal-lock guard at step " + std::to_string(k + 1), k + 1);
    }
    check_bounded(x, k + 1);
  }
  return traj;
}

FreeFloatRun simulate_free_float(const ChainConfig& cfg, const StateVector& x0, const Vec3& v0,
                                 double dt, double duration, long record_every) {
  using Vec13 = Eigen::Matrix<double, 13, 1>;
  const auto f = [&cfg](const Vec13& y) {
    const StateVector x = y.head<10>();
    const AttitudeState s = AttitudeState::from_vector(x);
    const Vec8 xgd = forward_dynamics(cfg, s, {});
    Vec13 dy;
    dy << euler_rates(s.euler, s.omega), s.sigma1, s.sigma2, xgd;
    return dy;
  };
  const long n = std::lround(duration / dt);
  record_every = std::max<long>(record_every, 1);
  Vec13 y;
  y << x0, v0;
  FreeFloatRun run;
  const auto record = [&](long k) {
    run.t.push_back(static_cast<double>(k) * dt);
    run.momentum.push_back(system_momentum(cfg, AttitudeState::from_vector(y.head<10>()),
                                           y.tail<3>()));
  };
  record(0);
  for (long k = 1; k <= n; ++k) {
    y = rk4(f, y, dt);
    if (k % record_every == 0 || k == n) record(k);
  }
  run.x_final = y.head<10>();
  run.v_final = y.tail<3>();
  return run;
}

double energy_metric(const Trajectory& traj) {
  double sum = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    sum += 0.5 * (traj.u[k - 1].norm() + traj.u[k].norm()) * (traj.t[k] - traj.t[k - 1]);
  }
  return sum;
}

Trajectory concatenate(const Trajectory& a, const Trajectory& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  const double gap = b.t.front() - a.t.back();
  if (std::abs(gap) > 1e-12 * std::max(1.0, std::abs(a.t.back()))) {
    throw std::invalid_argument("concatenate: second trajectory must start at the first's end");
  }
  Trajectory out = a;
  out.t.insert(out.t.end(), b.t.begin() + 1, b.t.end());
  out.x.insert(out.x.end(), b.x.begin() + 1, b.x.end());
  out.u.insert(out.u.end(), b.u.begin() + 1, b.u.end());
  return out;
}

SpectralPeak spectral_peak(const std::vector<double>& signal, double dt) {
  SpectralPeak peak;
  const std::size_t n = signal.size();
  if (n < 8 || !(dt > 0.0)) return peak;

  // Least-squares line through (i, s_i).
  const double nd = static_cast<double>(n);
  const double mean_i = 0.5 * (nd - 1.0);
  double mean_s = 0.0;
  for (double s : signal) mean_s += s;
  mean_s /= nd;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = static_cast<double>(i) - mean_i;
    sxy += di * (signal[i] - mean_s);
    sxx += di * di;
  }
  const double slope = sxy / sxx;

  std::vector<double> windowed(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / nd));
    const double detrended = signal[i] - mean_s - slope * (static_cast<double>(i) - mean_i);
    windowed[i] = w * detrended;
    wsum += w;
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, windowed);
  const std::size_t half = n / 2;
  std::vector<double> mag(half + 1);
  for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(spec[k]);

  std::size_t best = 0;
  for (std::size_t k = 1; k < half; ++k) {
    if (mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && (best == 0 || mag[k] > mag[best])) {
      best = k;
    }
  }
  if (best == 0) return peak;

  const double a = mag[best - 1], b = mag[best], c = mag[best + 1];
  const double denom = a - 2.0 * b + c;
  const double delta = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  const double amplitude = 2.0 * (b - 0.25 * (a - c) * delta) / wsum;
  if (!(amplitude > kSpectralNoiseFloor)) return peak;
  peak.found = true;
  peak.frequency = (static_cast<double>(best) + delta) / (nd * dt);
  peak.amplitude = amplitude;
  return peak;
}

std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& e,
                                    double fraction) {
  if (e.empty()) return std::nullopt;
  double scale = std::abs(e.front());
  if (scale == 0.0) {
    for (double v : e) scale = std::max(scale, std::abs(v));
  }
  const double band = fraction * scale;
  if (std::abs(e.back()) > band) return std::nullopt;
  std::size_t k = e.size() - 1;
  while (k > 0 && std::abs(e[k - 1]) <= band) --k;
  return t[k];
}

PerfReport oscillation_report(const Trajectory& traj, const StateVector& target) {
  PerfReport rep;
  rep.energy = energy_metric(traj);
  for (const InputVector& u : traj.u) rep.peak_control = std::max(rep.peak_control, u.norm());
  if (traj.size() == 0) return rep;
  const double e0 = (traj.x.front() - target).norm();
  const double en = (traj.x.back() - target).norm();
  rep.final_error_ratio = e0 > 0.0 ? en / e0 : en;

  const double dt = traj.size() > 1 ? traj.t[1] - traj.t[0] : 1.0;
  bool all_settled = true;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> e(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) e[k] = traj.x[k](i) - target(i);
    StateMetrics& m = rep.states[static_cast<std::size_t>(i)];
    m.settling_time = settling_time(traj.t, e);
    if (m.settling_time) {
      worst = std::max(worst, *m.settling_time);
    } else {
      all_settled = false;
    }

    std::size_t start = 0;
    if (m.settling_time) {
      start = static_cast<std::size_t>(
          std::lower_bound(traj.t.begin(), traj.t.end(), *m.settling_time) - traj.t.begin());
    }
    constexpr std::size_t kMinWindow = 64;
    if (traj.size() - start < kMinWindow) start = traj.size() > kMinWindow ? traj.size() - kMinWindow : 0;
    m.oscillation = spectral_peak(std::vector<double>(e.begin() + static_cast<long>(start), e.end()), dt);
  }
  if (all_settled) rep.settling_time = worst;
  return rep;
}

namespace {

double radical_inverse(int k, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (k > 0) {
    r += f * (k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

std::array<double, 9> perturbation_scales(const PerturbationSpec& spec, int k) {
  static constexpr std::array<int, 9> kBases{2, 3, 5, 7, 11, 13, 17, 19, 23};
  std::array<double, 9> s{};
  for (std::size_t d = 0; d < 9; ++d) {
    const double bound = d % 3 == 0 ? spec.mass : (d % 3 == 1 ? spec.inertia : spec.offset);
    s[d] = 1.0 + bound * (2.0 * radical_inverse(k, kBases[d]) - 1.0);
  }
  return s;
}

ChainConfig perturbed_chain(const ChainConfig& cfg, const std::array<double, 9>& s) {
  ChainConfig c = cfg;
  c.spacecraft.mass *= s[0];
  c.spacecraft.inertia *= s[1];
  c.g1_from_spacecraft *= s[2];
  c.boom.mass *= s[3];
  c.boom.inertia *= s[4];
  c.g1_from_boom *= s[5];
  c.g2_from_boom *= s[5];
  c.payload.mass *= s[6];
  c.payload.inertia *= s[7];
  c.g2_from_payload *= s[8];
  return c;
}

std::vector<SweepSummary> perturbation_sweep(const ChainConfig& cfg,
                                             const std::vector<Eigen::MatrixXd>& gains,
                                             const SimConfig& base, const PerturbationSpec& spec) {
  std::vector<SweepSummary> out(gains.size());
  for (std::size_t g = 0; g < gains.size(); ++g) {
    SweepSummary& sum = out[g];
    SimConfig sim = base;
    sim.K = Eigen::Matrix<double, 5, 10>(gains[g]);
    bool all_settled = true;
    double worst_settle = 0.0;
    for (int k = 1; k <= spec.samples; ++k) {
      const ChainConfig plant = perturbed_chain(cfg, perturbation_scales(spec, k));
      ++sum.samples;
      try {
        const Trajectory traj = simulate_closed_loop(plant, sim);
        const PerfReport rep = oscillation_report(traj, sim.target);
        sum.worst_energy = std::max(sum.worst_energy, rep.energy);
        if (rep.final_error_ratio <= spec.regulation_ratio) ++sum.regulated;
        if (rep.settling_time) {
          worst_settle = std::max(worst_settle, *rep.settling_time);
        } else {
          all_settled = false;
        }
      } catch (const Error&) {
        ++sum.diverged;
        all_settled = false;
      }
    }
    sum.fraction_regulated =
        sum.samples > 0 ? static_cast<double>(sum.regulated) / sum.samples : 0.0;
    if (all_settled && sum.samples > 0) sum.worst_settling_time = worst_settle;
  }
  return out;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  os << kCsvHeader << '\n';
  char buf[32];
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.t[k]);
    os << buf;
    for (int i = 0; i < 10; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.x[k](i));
      os << buf;
    }
    for (int i = 0; i < 5; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.u[k](i));
      os << buf;
    }
    os << '\n';
  }
}

void write_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(os, traj);
  if (!os) throw std::runtime_error("failed writing " + path);
}

Trajectory read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw std::runtime_error("trajectory CSV header mismatch");
  }
  Trajectory traj;
  long row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::array<double, 16> v{};
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= v.size()) throw std::runtime_error("too many columns in CSV row " + std::to_string(row));
      v[i++] = std::strtod(cell.c_str(), nullptr);
    }
    if (i != v.size()) throw std::runtime_error("too few columns in CSV row " + std::to_string(row));
    traj.t.push_back(v[0]);
    traj.x.push_back(Eigen::Map<const StateVector>(v.data() + 1));
    traj.u.push_back(Eigen::Map<const InputVector>(v.data() + 11));
  }
  return traj;
}

Trajectory read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_csv(is);
}

}  // namespace kanesat
