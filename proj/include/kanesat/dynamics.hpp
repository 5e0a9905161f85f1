#pragma once

// Three-body serial chain (bus -> boom -> payload, two single-axis gimbals)
// assembled in Stoneking's matrix form of Kane's equations:
//
//   L xg' = r1 + r2,   L  = Omega' [J] Omega + V' [M] V
//                      r1 = Omega' ({tau} - [J] alpha_r - {w x h})
//                      r2 = -V' [M] a_r
//
// Generalized speeds xg = [w_s/I (bus frame), sigma1, sigma2, v_s/I (inertial)].
// Angular quantities of each body are resolved in that body's frame; linear
// velocities, accelerations and CoM offsets are resolved in the inertial frame.

#include <Eigen/Dense>

#include "kanesat/spatial.hpp"

namespace kanesat {

using StateVector = Eigen::Matrix<double, 10, 1>;
using InputVector = Eigen::Matrix<double, 5, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat88 = Eigen::Matrix<double, 8, 8>;
using Mat98 = Eigen::Matrix<double, 9, 8>;

struct RigidBodyParams {
  double mass = 1.0;                  // kg
  Mat3 inertia = Mat3::Identity();    // kg m^2, about the CoM, body frame
};

/// Joint axes, each resolved in the outboard body frame.
struct JointAxes {
  Vec3 gimbal1 = Vec3::UnitY();
  Vec3 gimbal2 = Vec3::UnitY();
};

/// Body masses/inertias and the four CoM-to-joint offsets, each expressed in
/// the frame of the body it belongs to (metres).
struct ChainConfig {
  RigidBodyParams spacecraft;
  RigidBodyParams boom;
  RigidBodyParams payload;
  Vec3 g1_from_spacecraft = Vec3::Zero();  // r_{G1/s}|_s
  Vec3 g1_from_boom = Vec3::Zero();        // r_{G1/b}|_b
  Vec3 g2_from_boom = Vec3::Zero();        // r_{G2/b}|_b
  Vec3 g2_from_payload = Vec3::Zero();     // r_{G2/p}|_p
  JointAxes axes;
};

/// x = [phi, theta, psi, gamma, lambda, w1, w2, w3, sigma1, sigma2].
struct AttitudeState {
  EulerAngles321 euler;
  double gamma = 0.0;
  double lambda = 0.0;
  Vec3 omega = Vec3::Zero();  // w_{s/I} in bus frame
  double sigma1 = 0.0;
  double sigma2 = 0.0;

  static AttitudeState from_vector(const StateVector& x);
  StateVector to_vector() const;
};

/// u = [tau_s (bus frame, 3), gimbal-1 axis torque, gimbal-2 axis torque].
struct ControlInput {
  Vec3 bus_torque = Vec3::Zero();
  double gimbal1 = 0.0;
  double gimbal2 = 0.0;

  static ControlInput from_vector(const InputVector& u);
  InputVector to_vector() const;
};

/// CoM-to-joint offsets resolved in the inertial frame.
struct OffsetSet {
  Vec3 g1_from_spacecraft;  // r_{G1/s}|_I
  Vec3 g1_from_boom;        // r_{G1/b}|_I
  Vec3 g2_from_boom;        // r_{G2/b}|_I
  Vec3 g2_from_payload;     // r_{G2/p}|_I
  Vec3 g1_from_payload;     // r_{G1/p}|_I
  Vec3 spacecraft_from_boom;     // r_{s/b}|_I, bus CoM relative to boom CoM
  Vec3 spacecraft_from_payload;  // r_{s/p}|_I
};

/// Orientation matrices and inertial offsets at one configuration.
struct FrameSnapshot {
  Rotation s_from_inertial;  // O_{s/I}
  Rotation b_from_s;         // O_{b/s}
  Rotation p_from_b;         // O_{p/b}
  Rotation p_from_s;         // O_{p/s}
  Rotation inertial_from_s;  // O_{I/s}
  Rotation inertial_from_b;  // O_{I/b}
  Rotation inertial_from_p;  // O_{I/p}
  OffsetSet offsets;
};

struct RemainderAccelerations {
  Vec9 angular;  // {alpha_r}: [0; alpha_b^r (boom frame); alpha_p^r (payload frame)]
  Vec9 linear;   // {a_r}:     [0; a_b^r; a_p^r] (inertial)
};

struct KaneSystem {
  Mat98 omega_dyad;     // Omega
  Mat98 velocity_dyad;  // V
  RemainderAccelerations remainder;
  Mat88 mass_matrix;    // L
  Vec8 r1;
  Vec8 r2;
  FrameSnapshot frames;
  Vec3 boom_rate;       // w_{b/I} in boom frame
  Vec3 payload_rate;    // w_{p/I} in payload frame

  Vec8 rhs() const { return r1 + r2; }
};

/// Which linear solve produces xg' from L and r1 + r2.
enum class SolvePath { Dense, BlockReduced };

/// True when m is symmetric to `tol` relative to its largest entry.
bool is_symmetric(const Mat3& m, double tol = 1e-12);
bool is_positive_definite(const Mat3& m);

FrameSnapshot frame_snapshot(const ChainConfig& cfg, const AttitudeState& state);
OffsetSet offsets_in_inertial(const ChainConfig& cfg, const AttitudeState& state);

Mat98 partial_rate_dyad(const ChainConfig& cfg, const AttitudeState& state);
Mat98 partial_velocity_dyad(const ChainConfig& cfg, const AttitudeState& state);
RemainderAccelerations remainder_accelerations(const ChainConfig& cfg,
                                               const AttitudeState& state);

/// Throws SingularMass if any body mass or inertia is not positive definite,
/// which is exactly when L loses definiteness.
KaneSystem assemble_kane(const ChainConfig& cfg, const AttitudeState& state,
                         const ControlInput& u);

/// xg' = [w', sigma1', sigma2', v_s'] from a Cholesky solve of L.
Vec8 forward_dynamics(const ChainConfig& cfg, const AttitudeState& state,
                      const ControlInput& u);

/// Full 10-state derivative; the translational part of xg' is dropped.
StateVector state_derivative(const ChainConfig& cfg, const StateVector& x,
                             const InputVector& u,
                             SolvePath path = SolvePath::Dense);

/// Inertial linear momentum, angular momentum about the system CoM, and
/// kinetic energy for a configuration with bus CoM velocity `bus_velocity`
/// (inertial frame).
struct MomentumSummary {
  Vec3 angular_momentum = Vec3::Zero();
  Vec3 linear_momentum = Vec3::Zero();
  double kinetic_energy = 0.0;
};

MomentumSummary system_momentum(const ChainConfig& cfg, const AttitudeState& state,
                                const Vec3& bus_velocity);

/// Bus CoM velocity that makes total linear momentum zero.
Vec3 zero_momentum_bus_velocity(const ChainConfig& cfg, const AttitudeState& state);

}  // namespace kanesat
