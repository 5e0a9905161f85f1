#pragma once

#include <functional>

#include <Eigen/Dense>

#include "kanesat/dynamics.hpp"

namespace kanesat {

using StateMatrix = Eigen::Matrix<double, 10, 10>;
using InputMatrix = Eigen::Matrix<double, 10, 5>;

/// Split solution of L xg' = p with L partitioned as [[L1, L2], [L2', L3]],
/// L1 5x5 (rotational speeds) and L3 3x3 (bus translation).
struct BlockSolution {
  Eigen::Matrix<double, 5, 1> rotational;  // xg,1 = [w', sigma1', sigma2']
  Vec3 translational;                      // xg,2 = v_s'
};

/// xg,1 = (L1 - L2 L3^-1 L2')^-1 (p1 - L2 L3^-1 p2),
/// xg,2 = L3^-1 (p2 - L2' xg,1),
/// using Cholesky factors of L3 and of the 5x5 Schur complement.
/// Throws SingularBlock if either factorization fails.
BlockSolution block_reduced_solve(const Mat88& L, const Vec8& p);

/// A zero-rate attitude about which the plant is linearized (u = 0).
struct Equilibrium {
  AttitudeState state;

  /// Throws NotEquilibrium if any rate component is nonzero.
  static Equilibrium at(const AttitudeState& s);
  static Equilibrium at(EulerAngles321 euler, double gamma = 0.0, double lambda = 0.0);
};

struct LinearModel {
  StateMatrix A = StateMatrix::Zero();
  InputMatrix B = InputMatrix::Zero();
  Equilibrium equilibrium;
  double fd_step = 1e-6;
  double equilibrium_residual = 0.0;
};

struct LinearizeOptions {
  double fd_step = 1e-6;
  bool richardson = true;
};

/// ||state_derivative(cfg, x, 0)||_inf.
double find_equilibrium_residual(const ChainConfig& cfg, const AttitudeState& x);

using PlantFunction =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct Jacobians {
  Eigen::MatrixXd dfdx;
  Eigen::MatrixXd dfdu;
};

/// Central-difference Jacobians of f at (x0, u0) with per-coordinate step
/// h_i = max(step, step |z_i|) and optionally one Richardson level (h, h/2).
Jacobians numerical_jacobians(const PlantFunction& f, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& u0,
                              const LinearizeOptions& opts = {});

/// A = df/dx, B = df/du at (x_d, 0). Probes use the block-reduced solve.
LinearModel linearize(const ChainConfig& cfg, const Equilibrium& eq,
                      const LinearizeOptions& opts = {});

}  // namespace kanesat
