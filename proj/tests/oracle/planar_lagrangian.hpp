#pragma once

// Planar free-floating three-link chain, derived by hand from the Lagrangian.
// Shares no code with the Kane assembly: CoM positions are written directly
// as functions of q = [X, Z, theta, gamma, lambda] and differentiated by hand.
// See docs/planar_oracle.md for the derivation.

#include <cmath>

#include <Eigen/Dense>

namespace kanesat::oracle {

using Vec2 = Eigen::Vector2d;  // (x, z) components in the plane
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat25 = Eigen::Matrix<double, 2, 5>;

struct PlanarLink {
  double mass = 1.0;
  double iyy = 1.0;  // principal moment about the joint axis
};

struct PlanarChain {
  PlanarLink bus, boom, payload;
  Vec2 a = Vec2::Zero();  // bus CoM -> joint 1, bus frame
  Vec2 b = Vec2::Zero();  // boom CoM -> joint 1, boom frame
  Vec2 c = Vec2::Zero();  // boom CoM -> joint 2, boom frame
  Vec2 d = Vec2::Zero();  // payload CoM -> joint 2, payload frame
};

// R(beta) r: inertial components of a body vector on a link at absolute
// angle beta about +y. dR and ddR are its first and second beta-derivatives.
inline Vec2 R(double beta, const Vec2& r) {
  const double cb = std::cos(beta), sb = std::sin(beta);
  return {cb * r(0) + sb * r(1), -sb * r(0) + cb * r(1)};
}
inline Vec2 dR(double beta, const Vec2& r) {
  const double cb = std::cos(beta), sb = std::sin(beta);
  return {-sb * r(0) + cb * r(1), -cb * r(0) - sb * r(1)};
}
inline Vec2 ddR(double beta, const Vec2& r) { return -R(beta, r); }

// One term s * R(e'q) r of a CoM position, e selecting the absolute angle.
struct Term {
  double sign;
  Vec5 e;
  Vec2 r;
};

struct Kinematics {
  Mat25 J;       // d p / d q
  Vec2 Jdot_qd;  // (d J / dt) q'
};

inline Kinematics kinematics(const Term* terms, int count, const Vec5& q, const Vec5& qd) {
  Kinematics k;
  k.J.setZero();
  k.J(0, 0) = 1.0;
  k.J(1, 1) = 1.0;
  k.Jdot_qd.setZero();
  for (int i = 0; i < count; ++i) {
    const double beta = terms[i].e.dot(q);
    const double rate = terms[i].e.dot(qd);
    k.J += terms[i].sign * dR(beta, terms[i].r) * terms[i].e.transpose();
    k.Jdot_qd += terms[i].sign * ddR(beta, terms[i].r) * rate * rate;
  }
  return k;
}

struct PlanarResult {
  Vec5 qdd;  // [X'', Z'', theta'', gamma'', lambda'']
};

/// Solves M(q) q'' + c(q, q') = [0, 0, tau_y, u1, u2].
inline PlanarResult planar_accelerations(const PlanarChain& ch, const Vec5& q, const Vec5& qd,
                                         double tau_y, double u1, double u2) {
  Vec5 e_bus, e_boom, e_pay;
  e_bus << 0, 0, 1, 0, 0;
  e_boom << 0, 0, 1, 1, 0;
  e_pay << 0, 0, 1, 1, 1;

  // p_bus  = [X, Z]
  // p_boom = p_bus + R(th) a - R(th+g) b
  // p_pay  = p_boom + R(th+g) c - R(th+g+l) d
  const Term boom_terms[] = {{1.0, e_bus, ch.a}, {-1.0, e_boom, ch.b}};
  const Term pay_terms[] = {{1.0, e_bus, ch.a}, {-1.0, e_boom, ch.b}, {1.0, e_boom, ch.c},
                            {-1.0, e_pay, ch.d}};
  const Kinematics kb = kinematics(nullptr, 0, q, qd);
  const Kinematics kbo = kinematics(boom_terms, 2, q, qd);
  const Kinematics kp = kinematics(pay_terms, 4, q, qd);

  Mat5 M = ch.bus.mass * kb.J.transpose() * kb.J + ch.boom.mass * kbo.J.transpose() * kbo.J +
           ch.payload.mass * kp.J.transpose() * kp.J;
  M += ch.bus.iyy * e_bus * e_bus.transpose() + ch.boom.iyy * e_boom * e_boom.transpose() +
       ch.payload.iyy * e_pay * e_pay.transpose();
  const Vec5 bias = ch.bus.mass * kb.J.transpose() * kb.Jdot_qd +
                    ch.boom.mass * kbo.J.transpose() * kbo.Jdot_qd +
                    ch.payload.mass * kp.J.transpose() * kp.Jdot_qd;
  Vec5 Q;
  Q << 0.0, 0.0, tau_y, u1, u2;
  return {M.ldlt().solve(Q - bias)};
}

}  // namespace kanesat::oracle
