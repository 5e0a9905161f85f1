#pragma once

// Frame algebra shared by the dynamics code: skew operator, the 3-2-1 attitude
// matrix, single-axis gimbal rotations, and Euler-angle kinematics.
//
// Convention: a matrix O_{a/b} maps components resolved in frame b to
// components resolved in frame a, i.e. v|_a = O_{a/b} v|_b.

#include <Eigen/Dense>

namespace kanesat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Default distance (rad) from |pitch| = pi/2 at which kinematics refuse to run.
inline constexpr double kGimbalGuard = 1e-6;

/// Tolerance used when validating externally supplied rotation matrices.
inline constexpr double kRotationTolerance = 1e-12;

/// Yaw-pitch-roll attitude of the spacecraft bus relative to inertial.
struct EulerAngles321 {
  double roll = 0.0;   // phi
  double pitch = 0.0;  // theta
  double yaw = 0.0;    // psi
};

/// Proper orthogonal 3x3 matrix. Instances built by this module are valid by
/// construction; arbitrary matrices go through from_matrix(), which checks.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Throws InvalidRotation unless m m^T = I and det(m) = 1 to `tol`.
  static Rotation from_matrix(const Mat3& m, double tol = kRotationTolerance);

  const Mat3& matrix() const noexcept { return m_; }
  Rotation transpose() const { return Rotation(m_.transpose()); }

  Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool is_valid(double tol = kRotationTolerance) const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}

  friend Rotation rot321(const EulerAngles321&);
  friend Rotation rot_y(double);
  friend Rotation frame_rotation(const Vec3&, double);

  Mat3 m_;
};

/// a^x such that skew(a) * b == a.cross(b).
Mat3 skew(const Vec3& a);

/// O_{s/I} = Rx(roll) * Ry(pitch) * Rz(yaw), each factor a frame rotation.
Rotation rot321(const EulerAngles321& e);

/// Frame rotation about +y: [[c,0,-s],[0,1,0],[s,0,c]].
Rotation rot_y(double angle);

/// Frame rotation by `angle` about unit `axis` (components in either frame;
/// the axis is fixed by the rotation). Equals rot_y(angle) for axis = +y.
Rotation frame_rotation(const Vec3& axis, double angle);

inline Rotation inverse_rotation(const Rotation& r) { return r.transpose(); }

/// Euler-angle rates [roll, pitch, yaw]' from body rates `omega`.
/// Throws GimbalLock when |pitch| >= pi/2 - guard.
Vec3 euler_rates(const EulerAngles321& e, const Vec3& omega,
                 double guard = kGimbalGuard);

}  // namespace kanesat
