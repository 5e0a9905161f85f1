#include "kanesat/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "kanesat/errors.hpp"

namespace kanesat {
namespace {

using json = nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kAxisTol = 1e-9;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what, key);
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail(join(path, k), "unknown key");
  }
}

const json& child(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(join(path, key), "missing required key");
  return j.at(key);
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) fail(key, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(key, "must be finite");
  return v;
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), join(path, key)) : fallback;
}

std::vector<double> numbers(const json& j, const std::string& key, std::size_t expected = 0) {
  if (!j.is_array()) fail(key, "expected an array of numbers");
  if (expected && j.size() != expected) {
    fail(key, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  }
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], key + "[" + std::to_string(i) + "]"));
  return v;
}

Vec3 vec3(const json& j, const std::string& key) {
  const auto v = numbers(j, key, 3);
  return {v[0], v[1], v[2]};
}

MatrixXd matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) fail(key, "expected a nonempty array of rows");
  const std::size_t cols = j[0].size();
  MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = numbers(j[r], key + "[" + std::to_string(r) + "]", cols);
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

// Six unique entries [Ixx, Iyy, Izz, Ixy, Ixz, Iyz], or a full 3x3 matrix.
Mat3 inertia(const json& j, const std::string& key) {
  Mat3 I;
  if (j.is_array() && j.size() == 6 && !j[0].is_array()) {
    const auto v = numbers(j, key, 6);
    I << v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2];
  } else if (j.is_array() && j.size() == 3 && j[0].is_array()) {
    I = matrix(j, key);
    if (I.cols() != 3) fail(key, "expected a 3x3 matrix");
  } else {
    fail(key, "expected 6 unique entries [Ixx, Iyy, Izz, Ixy, Ixz, Iyz] or a 3x3 matrix");
  }
  return I;
}

RigidBodyParams body(const json& j, const std::string& path, LoadMode mode) {
  RigidBodyParams p;
  p.mass = number(child(j, path, "mass"), join(path, "mass"));
  p.inertia = inertia(child(j, path, "inertia"), join(path, "inertia"));
  if (mode == LoadMode::Strict) {
    if (p.mass <= 0.0) fail(join(path, "mass"), "must be positive");
    if (!is_symmetric(p.inertia)) fail(join(path, "inertia"), "must be symmetric");
    if (!is_positive_definite(p.inertia)) fail(join(path, "inertia"), "must be positive definite");
  }
  return p;
}

Vec3 axis(const json& j, const std::string& key, LoadMode mode) {
  const Vec3 a = vec3(j, key);
  if (mode == LoadMode::Strict && std::abs(a.norm() - 1.0) > kAxisTol) fail(key, "must be a unit vector");
  return a;
}

ChainConfig plant(const json& root, LoadMode mode) {
  ChainConfig c;
  const json& bodies = child(root, "", "bodies");
  allow_keys(bodies, "bodies", {"spacecraft", "boom", "payload"});

  const json& s = child(bodies, "bodies", "spacecraft");
  allow_keys(s, "bodies.spacecraft", {"mass", "inertia", "joint1_offset"});
  c.spacecraft = body(s, "bodies.spacecraft", mode);
  c.g1_from_spacecraft =
      vec3(child(s, "bodies.spacecraft", "joint1_offset"), "bodies.spacecraft.joint1_offset");

  const json& b = child(bodies, "bodies", "boom");
  allow_keys(b, "bodies.boom", {"mass", "inertia", "joint1_offset", "joint2_offset"});
  c.boom = body(b, "bodies.boom", mode);
  c.g1_from_boom = vec3(child(b, "bodies.boom", "joint1_offset"), "bodies.boom.joint1_offset");
  c.g2_from_boom = vec3(child(b, "bodies.boom", "joint2_offset"), "bodies.boom.joint2_offset");

  const json& p = child(bodies, "bodies", "payload");
  allow_keys(p, "bodies.payload", {"mass", "inertia", "joint2_offset"});
  c.payload = body(p, "bodies.payload", mode);
  c.g2_from_payload =
      vec3(child(p, "bodies.payload", "joint2_offset"), "bodies.payload.joint2_offset");

  const json& jn = child(root, "", "joints");
  allow_keys(jn, "joints", {"gimbal1_axis", "gimbal2_axis"});
  c.axes.gimbal1 = axis(child(jn, "joints", "gimbal1_axis"), "joints.gimbal1_axis", mode);
  c.axes.gimbal2 = axis(child(jn, "joints", "gimbal2_axis"), "joints.gimbal2_axis", mode);
  return c;
}

Equilibrium equilibrium(const json& j) {
  allow_keys(j, "equilibrium", {"roll_deg", "pitch_deg", "yaw_deg", "gamma_deg", "lambda_deg"});
  const auto deg = [&](const char* k) { return kDeg * number_or(j, "equilibrium", k, 0.0); };
  return Equilibrium::at(EulerAngles321{deg("roll_deg"), deg("pitch_deg"), deg("yaw_deg")},
                         deg("gamma_deg"), deg("lambda_deg"));
}

LqrWeights lqr(const json& j, Eigen::Index n, Eigen::Index m) {
  allow_keys(j, "lqr", {"q_diagonal", "r_diagonal"});
  const auto q = numbers(child(j, "lqr", "q_diagonal"), "lqr.q_diagonal", n);
  const auto r = numbers(child(j, "lqr", "r_diagonal"), "lqr.r_diagonal", m);
  LqrWeights w{Eigen::Map<const VectorXd>(q.data(), n).asDiagonal(),
               Eigen::Map<const VectorXd>(r.data(), m).asDiagonal()};
  try {
    w.validate(n, m);
  } catch (const std::invalid_argument& e) {
    fail("lqr", e.what());
  }
  return w;
}

PoleSet poles(const json& j, Eigen::Index n) {
  allow_keys(j, "rpa", {"poles"});
  const json& list = child(j, "rpa", "poles");
  if (!list.is_array()) fail("rpa.poles", "expected an array");
  if (static_cast<Eigen::Index>(list.size()) != n) {
    fail("rpa.poles", "expected " + std::to_string(n) + " poles, got " + std::to_string(list.size()));
  }
  PoleSet ps;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string key = "rpa.poles[" + std::to_string(i) + "]";
    if (list[i].is_array()) {
      const auto v = numbers(list[i], key, 2);
      ps.poles.emplace_back(v[0], v[1]);
    } else {
      ps.poles.emplace_back(number(list[i], key), 0.0);
    }
  }
  return ps;
}

SimConfig sim(const json& j, PerturbationSpec& pert) {
  allow_keys(j, "sim", {"dt", "duration", "x0", "perturbation"});
  SimConfig s;
  s.dt = number(child(j, "sim", "dt"), "sim.dt");
  s.duration = number(child(j, "sim", "duration"), "sim.duration");
  if (j.contains("x0")) {
    const json& x0 = j.at("x0");
    allow_keys(x0, "sim.x0", {"angles_deg", "rates_deg_s"});
    if (x0.contains("angles_deg")) {
      const auto a = numbers(x0.at("angles_deg"), "sim.x0.angles_deg", 5);
      for (int i = 0; i < 5; ++i) s.x0(i) = kDeg * a[i];
    }
    if (x0.contains("rates_deg_s")) {
      const auto r = numbers(x0.at("rates_deg_s"), "sim.x0.rates_deg_s", 5);
      for (int i = 0; i < 5; ++i) s.x0(5 + i) = kDeg * r[i];
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail("sim", e.what());
  }
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    allow_keys(p, "sim.perturbation", {"mass", "inertia", "offset", "samples"});
    pert.mass = number_or(p, "sim.perturbation", "mass", pert.mass);
    pert.inertia = number_or(p, "sim.perturbation", "inertia", pert.inertia);
    pert.offset = number_or(p, "sim.perturbation", "offset", pert.offset);
    for (const double b : {pert.mass, pert.inertia, pert.offset}) {
      if (b < 0.0 || b >= 1.0) fail("sim.perturbation", "bounds must lie in [0, 1)");
    }
    if (p.contains("samples")) {
      const json& n = p.at("samples");
      if (!n.is_number_integer() || n.get<long>() < 1 || n.get<long>() > 100000) {
        fail("sim.perturbation.samples", "expected an integer in [1, 100000]");
      }
      pert.samples = n.get<int>();
    }
  }
  return s;
}

}  // namespace

const ChainConfig& Scenario::require_plant() const {
  if (!plant) throw ConfigError("scenario has no plant (bodies/joints)", "bodies");
  return *plant;
}

const Equilibrium& Scenario::require_equilibrium() const {
  if (!equilibrium) throw ConfigError("scenario has no equilibrium section", "equilibrium");
  return *equilibrium;
}

const SimConfig& Scenario::require_sim() const {
  if (!sim) throw ConfigError("scenario has no sim section", "sim");
  return *sim;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario parse_scenario(const std::string& text, LoadMode mode) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "<root>");
  }
  allow_keys(root, "", {"description", "bodies", "joints", "equilibrium", "model", "lqr", "rpa", "sim"});
  if (root.contains("description") && !root.at("description").is_string()) {
    fail("description", "expected a string");
  }

  Scenario sc;
  sc.hash = fnv1a_hex(text);
  Eigen::Index n = 10, m = 5;
  if (root.contains("model")) {
    for (const char* k : {"bodies", "joints", "equilibrium", "sim"}) {
      if (root.contains(k)) fail(k, "not allowed together with model");
    }
    const json& mj = root.at("model");
    allow_keys(mj, "model", {"A", "B"});
    ModelOverride mo{matrix(child(mj, "model", "A"), "model.A"),
                     matrix(child(mj, "model", "B"), "model.B")};
    if (mo.A.rows() != mo.A.cols()) fail("model.A", "must be square");
    if (mo.B.rows() != mo.A.rows()) fail("model.B", "row count must match model.A");
    n = mo.A.rows();
    m = mo.B.cols();
    sc.model = std::move(mo);
  } else {
    sc.plant = plant(root, mode);
    sc.equilibrium = equilibrium(child(root, "", "equilibrium"));
  }
  if (root.contains("lqr")) sc.lqr = lqr(root.at("lqr"), n, m);
  if (root.contains("rpa")) sc.rpa = poles(root.at("rpa"), n);
  if (root.contains("sim")) {
    sc.sim = sim(root.at("sim"), sc.perturbation);
    sc.sim->target = sc.equilibrium->state.to_vector();
  }
  return sc;
}

Scenario load_scenario(const std::string& path, LoadMode mode) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path, "<file>");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), mode);
}

}  // namespace kanesat
