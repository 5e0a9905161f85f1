#include "kanesat/report.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "kanesat/errors.hpp"

namespace kanesat {
namespace {

constexpr std::array<const char*, 10> kStateNames{
    "phi", "theta", "psi", "gamma", "lambda", "w1", "w2", "w3", "sigma1", "sigma2"};

json optional_to_json(const std::optional<double>& v) {
  return v ? number_to_json(*v) : json(nullptr);
}

json peak_to_json(const SpectralPeak& p) {
  return {{"found", p.found},
          {"frequency_hz", number_to_json(p.frequency)},
          {"amplitude", number_to_json(p.amplitude)}};
}

}  // namespace

json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError("expected a number, got " + j.dump(), "<report>");
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("expected a matrix", "<report>");
  if (j.empty()) return {};
  MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != static_cast<std::size_t>(m.cols())) throw ConfigError("ragged matrix", "<report>");
    for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = number_from_json(j[r][c]);
  }
  return m;
}

json complex_vector_to_json(const VectorXcd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back({number_to_json(v(i).real()), number_to_json(v(i).imag())});
  }
  return a;
}

VectorXcd complex_vector_from_json(const json& j) {
  VectorXcd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(i) = {number_from_json(j[i].at(0)), number_from_json(j[i].at(1))};
  }
  return v;
}

json complex_matrix_to_json(const MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(complex_vector_to_json(m.row(r).transpose()));
  return rows;
}

MatrixXcd complex_matrix_from_json(const json& j) {
  if (j.empty()) return {};
  MatrixXcd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) m.row(r) = complex_vector_from_json(j[r]).transpose();
  return m;
}

json to_json(const LinearModel& m) {
  const AttitudeState& s = m.equilibrium.state;
  return {{"equilibrium_rad",
           {{"roll", s.euler.roll}, {"pitch", s.euler.pitch}, {"yaw", s.euler.yaw},
            {"gamma", s.gamma}, {"lambda", s.lambda}}},
          {"equilibrium_residual", number_to_json(m.equilibrium_residual)},
          {"fd_step", m.fd_step},
          {"A", matrix_to_json(m.A)},
          {"B", matrix_to_json(m.B)}};
}

json to_json(const GainDesign& d) {
  json eig = json::array();
  for (Eigen::Index i = 0; i < d.conditioning.eigen_condition.size(); ++i) {
    eig.push_back(number_to_json(d.conditioning.eigen_condition(i)));
  }
  json j = {{"method", to_string(d.method)},
            {"K", matrix_to_json(d.K)},
            {"closed_loop_poles", complex_vector_to_json(d.closed_loop_poles)},
            {"conditioning",
             {{"abs_det", number_to_json(d.conditioning.abs_det)},
              {"cond2", number_to_json(d.conditioning.cond2)},
              {"eigen_condition", eig}}},
            {"X", complex_matrix_to_json(d.X)}};
  if (d.method == DesignMethod::Lqr) {
    j["P"] = matrix_to_json(d.P);
    j["riccati_residual"] = number_to_json(d.riccati_residual);
  } else {
    json hist = json::array();
    for (double v : d.det_history) hist.push_back(number_to_json(v));
    j["initial_abs_det"] = number_to_json(d.initial_abs_det);
    j["det_history"] = hist;
    j["sweeps"] = d.sweeps;
    j["imag_gain_norm"] = number_to_json(d.imag_gain_norm);
    j["pole_error"] = number_to_json(d.pole_error);
  }
  return j;
}

GainDesign design_from_json(const json& j) {
  GainDesign d;
  const std::string method = j.at("method").get<std::string>();
  if (method == "lqr") {
    d.method = DesignMethod::Lqr;
  } else if (method == "rpa") {
    d.method = DesignMethod::Rpa;
  } else {
    throw ConfigError("unknown design method '" + method + "'", "method");
  }
  d.K = matrix_from_json(j.at("K"));
  d.closed_loop_poles = complex_vector_from_json(j.at("closed_loop_poles"));
  d.X = complex_matrix_from_json(j.at("X"));
  const json& c = j.at("conditioning");
  d.conditioning.abs_det = number_from_json(c.at("abs_det"));
  d.conditioning.cond2 = number_from_json(c.at("cond2"));
  d.conditioning.eigen_condition.resize(c.at("eigen_condition").size());
  for (std::size_t i = 0; i < c.at("eigen_condition").size(); ++i) {
    d.conditioning.eigen_condition(i) = number_from_json(c.at("eigen_condition")[i]);
  }
  if (d.method == DesignMethod::Lqr) {
    d.P = matrix_from_json(j.at("P"));
    d.riccati_residual = number_from_json(j.at("riccati_residual"));
  } else {
    d.initial_abs_det = number_from_json(j.at("initial_abs_det"));
    for (const auto& v : j.at("det_history")) d.det_history.push_back(number_from_json(v));
    d.sweeps = j.at("sweeps").get<int>();
    d.imag_gain_norm = number_from_json(j.at("imag_gain_norm"));
    d.pole_error = number_from_json(j.at("pole_error"));
  }
  return d;
}

json to_json(const PerfReport& r) {
  json states = json::object();
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    states[kStateNames[i]] = {{"settling_time", optional_to_json(r.states[i].settling_time)},
                              {"oscillation", peak_to_json(r.states[i].oscillation)}};
  }
  return {{"energy", number_to_json(r.energy)},
          {"peak_control", number_to_json(r.peak_control)},
          {"final_error_ratio", number_to_json(r.final_error_ratio)},
          {"settling_time", optional_to_json(r.settling_time)},
          {"states", states}};
}

json to_json(const SweepSummary& s) {
  return {{"samples", s.samples},
          {"regulated", s.regulated},
          {"diverged", s.diverged},
          {"fraction_regulated", number_to_json(s.fraction_regulated)},
          {"worst_energy", number_to_json(s.worst_energy)},
          {"worst_settling_time", optional_to_json(s.worst_settling_time)}};
}

json report_header(const std::string& config_hash) {
  return {{"tool", kToolName}, {"version", kToolVersion}, {"config_hash", config_hash}};
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

void write_report(const std::string& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << dump_report(j);
  if (!os) throw std::runtime_error("failed writing " + path);
}

json read_report(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path, "<file>");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what(), "<file>");
  }
}

}  // namespace kanesat
