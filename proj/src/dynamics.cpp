#include "kanesat/dynamics.hpp"

#include <cmath>

#include <sstream>
#include <string_view>

#include "kanesat/errors.hpp"
#include "kanesat/linearize.hpp"

namespace kanesat {

AttitudeState AttitudeState::from_vector(const StateVector& x) {
  AttitudeState s;
  s.euler = {x(0), x(1), x(2)};
  s.gamma = x(3);
  s.lambda = x(4);
  s.omega = x.segment<3>(5);
  s.sigma1 = x(8);
  s.sigma2 = x(9);
  return s;
}

StateVector AttitudeState::to_vector() const {
  StateVector x;
  x << euler.roll, euler.pitch, euler.yaw, gamma, lambda, omega, sigma1, sigma2;
  return x;
}

ControlInput ControlInput::from_vector(const InputVector& u) {
  return {u.head<3>(), u(3), u(4)};
}

InputVector ControlInput::to_vector() const {
  InputVector u;
  u << bus_torque, gimbal1, gimbal2;
  return u;
}

bool is_symmetric(const Mat3& m, double tol) {
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_positive_definite(const Mat3& m) {
  if (!m.allFinite()) return false;
  const Mat3 sym = 0.5 * (m + m.transpose());
  Eigen::LLT<Mat3> llt(sym);
  return llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0;
}

FrameSnapshot frame_snapshot(const ChainConfig& cfg, const AttitudeState& state) {
  FrameSnapshot f;
  f.s_from_inertial = rot321(state.euler);
  f.b_from_s = frame_rotation(cfg.axes.gimbal1, state.gamma);
  f.p_from_b = frame_rotation(cfg.axes.gimbal2, state.lambda);
  if (cfg.axes.gimbal1 == Vec3::UnitY() && cfg.axes.gimbal2 == Vec3::UnitY()) {
    f.p_from_s = rot_y(state.gamma + state.lambda);
  } else {
    f.p_from_s = f.p_from_b * f.b_from_s;
  }
  f.inertial_from_s = f.s_from_inertial.transpose();
  f.inertial_from_b = (f.b_from_s * f.s_from_inertial).transpose();
  f.inertial_from_p = (f.p_from_s * f.s_from_inertial).transpose();

  OffsetSet& r = f.offsets;
  r.g1_from_spacecraft = f.inertial_from_s * cfg.g1_from_spacecraft;
  r.g1_from_boom = f.inertial_from_b * cfg.g1_from_boom;
  r.g2_from_boom = f.inertial_from_b * cfg.g2_from_boom;
  r.g2_from_payload = f.inertial_from_p * cfg.g2_from_payload;
  r.g1_from_payload = r.g2_from_payload - r.g2_from_boom + r.g1_from_boom;
  r.spacecraft_from_boom = r.g1_from_boom - r.g1_from_spacecraft;
  r.spacecraft_from_payload = r.g1_from_payload - r.g1_from_spacecraft;
  return f;
}

OffsetSet offsets_in_inertial(const ChainConfig& cfg, const AttitudeState& state) {
  return frame_snapshot(cfg, state).offsets;
}

namespace {

Mat98 rate_dyad(const ChainConfig& cfg, const FrameSnapshot& f) {
  Mat98 w = Mat98::Zero();
  w.block<3, 3>(0, 0).setIdentity();
  w.block<3, 3>(3, 0) = f.b_from_s.matrix();
  w.block<3, 1>(3, 3) = cfg.axes.gimbal1;
  w.block<3, 3>(6, 0) = f.p_from_s.matrix();
  w.block<3, 1>(6, 3) = f.p_from_b * cfg.axes.gimbal1;
  w.block<3, 1>(6, 4) = cfg.axes.gimbal2;
  return w;
}

Mat98 velocity_dyad(const ChainConfig& cfg, const FrameSnapshot& f) {
  const OffsetSet& r = f.offsets;
  const Mat3 g1b = skew(r.g1_from_boom);
  const Mat3 g1s = skew(r.g1_from_spacecraft);
  const Mat3 g2p = skew(r.g2_from_payload);
  const Mat3 g2b = skew(r.g2_from_boom);
  const Vec3 axis1_inertial = f.inertial_from_b * cfg.axes.gimbal1;
  const Vec3 axis2_inertial = f.inertial_from_p * cfg.axes.gimbal2;

  Mat98 v = Mat98::Zero();
  for (int row = 0; row < 9; row += 3) v.block<3, 3>(row, 5).setIdentity();
  v.block<3, 3>(3, 0) = (g1b - g1s) * f.inertial_from_s.matrix();
  v.block<3, 1>(3, 3) = g1b * axis1_inertial;
  v.block<3, 3>(6, 0) = (g1b - g1s + g2p - g2b) * f.inertial_from_s.matrix();
  v.block<3, 1>(6, 3) = (g1b + g2p - g2b) * axis1_inertial;
  v.block<3, 1>(6, 4) = g2p * axis2_inertial;
  return v;
}

struct BodyRates {
  Vec3 spacecraft;  // bus frame
  Vec3 boom;        // boom frame
  Vec3 payload;     // payload frame
};

// Inertial angular velocity of each body in its own frame, with the joint
// rates included at every level of the chain.
BodyRates body_rates(const ChainConfig& cfg, const FrameSnapshot& f,
                     const AttitudeState& s) {
  BodyRates w;
  w.spacecraft = s.omega;
  w.boom = f.b_from_s * s.omega + cfg.axes.gimbal1 * s.sigma1;
  w.payload = f.p_from_b * w.boom + cfg.axes.gimbal2 * s.sigma2;
  return w;
}

RemainderAccelerations remainders(const ChainConfig& cfg, const FrameSnapshot& f,
                                  const AttitudeState& s, const BodyRates& w) {
  const OffsetSet& r = f.offsets;
  const Vec3 alpha_b = w.boom.cross(cfg.axes.gimbal1 * s.sigma1);
  const Vec3 alpha_p = w.payload.cross(cfg.axes.gimbal2 * s.sigma2) + f.p_from_b * alpha_b;

  const Vec3 ws = f.inertial_from_s * w.spacecraft;
  const Vec3 wb = f.inertial_from_b * w.boom;
  const Vec3 wp = f.inertial_from_p * w.payload;
  const Vec3 alpha_b_inertial = f.inertial_from_b * alpha_b;
  const Vec3 alpha_p_inertial = f.inertial_from_p * alpha_p;

  const Vec3 a_b = ws.cross(ws.cross(r.g1_from_spacecraft)) -
                   wb.cross(wb.cross(r.g1_from_boom)) +
                   r.g1_from_boom.cross(alpha_b_inertial);
  const Vec3 a_p = a_b - r.g2_from_boom.cross(alpha_b_inertial) +
                   r.g2_from_payload.cross(alpha_p_inertial) +
                   wb.cross(wb.cross(r.g2_from_boom)) -
                   wp.cross(wp.cross(r.g2_from_payload));

  RemainderAccelerations out;
  out.angular << Vec3::Zero(), alpha_b, alpha_p;
  out.linear << Vec3::Zero(), a_b, a_p;
  return out;
}

void require_massive(const RigidBodyParams& body, std::string_view name) {
  if (!(body.mass > 0.0) || !std::isfinite(body.mass)) {
    std::ostringstream os;
    os << "L is not positive definite: " << name << " mass " << body.mass
       << " kg is not positive";
    throw SingularMass(os.str());
  }
  if (!is_positive_definite(body.inertia)) {
    std::ostringstream os;
    os << "L is not positive definite: " << name << " inertia is not positive definite";
    throw SingularMass(os.str());
  }
}

}  // namespace

Mat98 partial_rate_dyad(const ChainConfig& cfg, const AttitudeState& state) {
  return rate_dyad(cfg, frame_snapshot(cfg, state));
}

Mat98 partial_velocity_dyad(const ChainConfig& cfg, const AttitudeState& state) {
  return velocity_dyad(cfg, frame_snapshot(cfg, state));
}

RemainderAccelerations remainder_accelerations(const ChainConfig& cfg,
                                               const AttitudeState& state) {
  const FrameSnapshot f = frame_snapshot(cfg, state);
  return remainders(cfg, f, state, body_rates(cfg, f, state));
}

KaneSystem assemble_kane(const ChainConfig& cfg, const AttitudeState& state,
                         const ControlInput& u) {
  require_massive(cfg.spacecraft, "spacecraft");
  require_massive(cfg.boom, "boom");
  require_massive(cfg.payload, "payload");

  KaneSystem k;
  k.frames = frame_snapshot(cfg, state);
  const FrameSnapshot& f = k.frames;
  const BodyRates w = body_rates(cfg, f, state);
  k.boom_rate = w.boom;
  k.payload_rate = w.payload;
  k.omega_dyad = rate_dyad(cfg, f);
  k.velocity_dyad = velocity_dyad(cfg, f);
  k.remainder = remainders(cfg, f, state, w);

  const Mat3& js = cfg.spacecraft.inertia;
  const Mat3& jb = cfg.boom.inertia;
  const Mat3& jp = cfg.payload.inertia;

  Eigen::Matrix<double, 9, 9> j = Eigen::Matrix<double, 9, 9>::Zero();
  j.block<3, 3>(0, 0) = js;
  j.block<3, 3>(3, 3) = jb;
  j.block<3, 3>(6, 6) = jp;
  Vec9 m;
  m << Vec3::Constant(cfg.spacecraft.mass), Vec3::Constant(cfg.boom.mass),
      Vec3::Constant(cfg.payload.mass);

  // Gimbal torques act on the outboard body along its axis; the reaction on
  // the inboard body is carried into the inboard frame.
  const Vec3 tau_b = cfg.axes.gimbal1 * u.gimbal1;
  const Vec3 tau_p = cfg.axes.gimbal2 * u.gimbal2;
  Vec9 tau;
  tau << u.bus_torque - f.b_from_s.matrix().transpose() * tau_b,
      tau_b - f.p_from_b.matrix().transpose() * tau_p, tau_p;

  Vec9 gyro;
  gyro << w.spacecraft.cross(js * w.spacecraft), w.boom.cross(jb * w.boom),
      w.payload.cross(jp * w.payload);

  const Mat98& om = k.omega_dyad;
  const Mat98& v = k.velocity_dyad;
  k.mass_matrix = om.transpose() * j * om + v.transpose() * m.asDiagonal() * v;
  k.r1 = om.transpose() * (tau - j * k.remainder.angular - gyro);
  k.r2 = -(v.transpose() * m.asDiagonal() * k.remainder.linear);
  return k;
}

Vec8 forward_dynamics(const ChainConfig& cfg, const AttitudeState& state,
                      const ControlInput& u) {
  const KaneSystem k = assemble_kane(cfg, state, u);
  Eigen::LLT<Mat88> llt(k.mass_matrix);
  if (llt.info() != Eigen::Success) {
    throw SingularMass("L is not positive definite: Cholesky factorization failed");
  }
  return llt.solve(k.rhs());
}

StateVector state_derivative(const ChainConfig& cfg, const StateVector& x,
                             const InputVector& u, SolvePath path) {
  const AttitudeState s = AttitudeState::from_vector(x);
  const Vec3 euler_dot = euler_rates(s.euler, s.omega);

  Eigen::Matrix<double, 5, 1> rotational;
  if (path == SolvePath::Dense) {
    rotational = forward_dynamics(cfg, s, ControlInput::from_vector(u)).head<5>();
  } else {
    const KaneSystem k = assemble_kane(cfg, s, ControlInput::from_vector(u));
    rotational = block_reduced_solve(k.mass_matrix, k.rhs()).rotational;
  }

  StateVector dx;
  dx << euler_dot, s.sigma1, s.sigma2, rotational;
  return dx;
}

MomentumSummary system_momentum(const ChainConfig& cfg, const AttitudeState& state,
                                const Vec3& bus_velocity) {
  const FrameSnapshot f = frame_snapshot(cfg, state);
  const OffsetSet& r = f.offsets;
  const BodyRates w = body_rates(cfg, f, state);

  // Two-point velocity formula across each joint.
  const Vec3 ws = f.inertial_from_s * w.spacecraft;
  const Vec3 wb = f.inertial_from_b * w.boom;
  const Vec3 wp = f.inertial_from_p * w.payload;
  const Vec3 vs = bus_velocity;
  const Vec3 vg1 = vs + ws.cross(r.g1_from_spacecraft);
  const Vec3 vb = vg1 - wb.cross(r.g1_from_boom);
  const Vec3 vg2 = vb + wb.cross(r.g2_from_boom);
  const Vec3 vp = vg2 - wp.cross(r.g2_from_payload);

  const double ms = cfg.spacecraft.mass, mb = cfg.boom.mass, mp = cfg.payload.mass;
  const double total = ms + mb + mp;

  // Positions relative to the bus CoM, then shifted to the system CoM.
  const Vec3 ps = Vec3::Zero();
  const Vec3 pb = -r.spacecraft_from_boom;
  const Vec3 pp = -r.spacecraft_from_payload;
  const Vec3 com = (ms * ps + mb * pb + mp * pp) / total;

  const Mat3 js = f.inertial_from_s.matrix() * cfg.spacecraft.inertia *
                  f.inertial_from_s.matrix().transpose();
  const Mat3 jb = f.inertial_from_b.matrix() * cfg.boom.inertia *
                  f.inertial_from_b.matrix().transpose();
  const Mat3 jp = f.inertial_from_p.matrix() * cfg.payload.inertia *
                  f.inertial_from_p.matrix().transpose();

  MomentumSummary out;
  out.linear_momentum = ms * vs + mb * vb + mp * vp;
  out.angular_momentum = js * ws + jb * wb + jp * wp + ms * (ps - com).cross(vs) +
                         mb * (pb - com).cross(vb) + mp * (pp - com).cross(vp);
  out.kinetic_energy =
      0.5 * (ws.dot(js * ws) + wb.dot(jb * wb) + wp.dot(jp * wp) + ms * vs.squaredNorm() +
             mb * vb.squaredNorm() + mp * vp.squaredNorm());
  return out;
}

Vec3 zero_momentum_bus_velocity(const ChainConfig& cfg, const AttitudeState& state) {
  const double total = cfg.spacecraft.mass + cfg.boom.mass + cfg.payload.mass;
  return -system_momentum(cfg, state, Vec3::Zero()).linear_momentum / total;
}

}  // namespace kanesat
