#include "kanesat/spatial.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kanesat/errors.hpp"

namespace kanesat {

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
  Rotation r(m);
  if (!m.allFinite() || !r.is_valid(tol)) {
    std::ostringstream os;
    os << "matrix is not a proper rotation (|R R^T - I| = "
       << (m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff()
       << ", det = " << m.determinant() << ")";
    throw InvalidRotation(os.str());
  }
  return r;
}

bool Rotation::is_valid(double tol) const {
  const double orth =
      (m_ * m_.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(m_.determinant() - 1.0) <= tol;
}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  // clang-format off
  s <<  0.0,  -a.z(),  a.y(),
        a.z(),  0.0,  -a.x(),
       -a.y(),  a.x(),  0.0;
  // clang-format on
  return s;
}

Rotation rot321(const EulerAngles321& e) {
  const double cf = std::cos(e.roll), sf = std::sin(e.roll);
  const double ct = std::cos(e.pitch), st = std::sin(e.pitch);
  const double cp = std::cos(e.yaw), sp = std::sin(e.yaw);

  Mat3 rx, ry, rz;
  // clang-format off
  rx << 1.0, 0.0, 0.0,
        0.0,  cf,  sf,
        0.0, -sf,  cf;
  ry <<  ct, 0.0, -st,
        0.0, 1.0, 0.0,
         st, 0.0,  ct;
  rz <<  cp,  sp, 0.0,
        -sp,  cp, 0.0,
        0.0, 0.0, 1.0;
  // clang-format on
  return Rotation(rx * ry * rz);
}

Rotation rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  // clang-format off
  m <<   c, 0.0,  -s,
       0.0, 1.0, 0.0,
         s, 0.0,   c;
  // clang-format on
  return Rotation(m);
}

Rotation frame_rotation(const Vec3& axis, double angle) {
  if (axis == Vec3::UnitY()) return rot_y(angle);
  const Vec3 n = axis.normalized();
  return Rotation(Eigen::AngleAxisd(angle, n).toRotationMatrix().transpose());
}

Vec3 euler_rates(const EulerAngles321& e, const Vec3& omega, double guard) {
  if (!(std::abs(e.pitch) < std::numbers::pi / 2.0 - guard)) {
    std::ostringstream os;
    os << "gimbal lock: |pitch| = " << std::abs(e.pitch)
       << " rad is within " << guard << " rad of pi/2";
    throw GimbalLock(os.str());
  }
  const double sf = std::sin(e.roll), cf = std::cos(e.roll);
  const double tt = std::tan(e.pitch), sec = 1.0 / std::cos(e.pitch);
  return {omega.dot(Vec3(1.0, sf * tt, cf * tt)),
          omega.dot(Vec3(0.0, cf, -sf)),
          omega.dot(Vec3(0.0, sf * sec, cf * sec))};
}

}  // namespace kanesat
