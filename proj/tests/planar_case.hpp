#pragma once

// Random planar configurations of the chain paired with the Lagrangian
// oracle's generalized accelerations. Every offset lies in the x-z plane,
// y is a principal axis, bus roll/yaw and their rates are zero and all
// torques act about y, so the motion stays in the plane.

#include <random>

#include "kanesat/dynamics.hpp"
#include "oracle/planar_lagrangian.hpp"

namespace kanesat::testing {

struct PlanarCase {
  ChainConfig cfg;
  AttitudeState state;
  ControlInput input;
  Vec8 expected;  // xg' predicted by the oracle
};

inline PlanarCase planar_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  oracle::PlanarChain pc;
  pc.bus = {50.0 + 20.0 * u(rng), 30.0 + 10.0 * u(rng)};
  pc.boom = {3.0 + u(rng), 4.0 + u(rng)};
  pc.payload = {20.0 + 5.0 * u(rng), 12.0 + 4.0 * u(rng)};
  pc.a = {u(rng), 2.0 * u(rng)};
  pc.b = {u(rng), 2.0 * u(rng)};
  pc.c = {u(rng), 2.0 * u(rng)};
  pc.d = {u(rng), 2.0 * u(rng)};

  PlanarCase out;
  ChainConfig& c = out.cfg;
  const auto body = [&](const oracle::PlanarLink& l) {
    RigidBodyParams p;
    p.mass = l.mass;
    p.inertia = Mat3::Zero();
    p.inertia(0, 0) = l.iyy * 1.3 + 1.0;
    p.inertia(1, 1) = l.iyy;
    p.inertia(2, 2) = l.iyy * 0.7 + 2.0;
    p.inertia(0, 2) = p.inertia(2, 0) = 0.2;  // x-z product keeps y principal
    return p;
  };
  c.spacecraft = body(pc.bus);
  c.boom = body(pc.boom);
  c.payload = body(pc.payload);
  c.g1_from_spacecraft = {pc.a(0), 0.0, pc.a(1)};
  c.g1_from_boom = {pc.b(0), 0.0, pc.b(1)};
  c.g2_from_boom = {pc.c(0), 0.0, pc.c(1)};
  c.g2_from_payload = {pc.d(0), 0.0, pc.d(1)};

  AttitudeState& s = out.state;
  s.euler = {0.0, 1.2 * u(rng), 0.0};
  s.gamma = 3.0 * u(rng);
  s.lambda = 3.0 * u(rng);
  s.omega = {0.0, u(rng), 0.0};
  s.sigma1 = u(rng);
  s.sigma2 = u(rng);
  ControlInput& in = out.input;
  in.bus_torque = {0.0, 5.0 * u(rng), 0.0};
  in.gimbal1 = 5.0 * u(rng);
  in.gimbal2 = 5.0 * u(rng);

  oracle::Vec5 q, qd;
  q << 0.0, 0.0, s.euler.pitch, s.gamma, s.lambda;
  qd << 0.0, 0.0, s.omega(1), s.sigma1, s.sigma2;
  const oracle::Vec5 qdd =
      oracle::planar_accelerations(pc, q, qd, in.bus_torque(1), in.gimbal1, in.gimbal2).qdd;
  out.expected << 0.0, qdd(2), 0.0, qdd(3), qdd(4), qdd(0), 0.0, qdd(1);
  return out;
}

}  // namespace kanesat::testing
