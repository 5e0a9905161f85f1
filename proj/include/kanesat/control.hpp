#pragma once

// State-feedback synthesis on a linear plant x' = A x + B u with u = -K x.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kanesat {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct LqrWeights {
  MatrixXd Q;
  MatrixXd R;

  /// Throws std::invalid_argument unless Q is symmetric PSD and R symmetric PD.
  void validate(Eigen::Index states, Eigen::Index inputs) const;
};

/// Desired closed-loop spectrum; must be closed under conjugation.
struct PoleSet {
  std::vector<std::complex<double>> poles;

  /// Throws std::invalid_argument on a violated invariant.
  void validate(Eigen::Index states, Eigen::Index input_rank) const;
};

enum class DesignMethod { Lqr, Rpa };

std::string to_string(DesignMethod m);

struct ConditioningReport {
  double abs_det = 0.0;       // |det X| with unit-norm columns
  double cond2 = 0.0;         // sigma_max / sigma_min
  VectorXd eigen_condition;   // 1 / |y_i^H x_i| per eigenvalue
};

struct GainDesign {
  DesignMethod method = DesignMethod::Lqr;
  MatrixXd K;
  VectorXcd closed_loop_poles;  // eig(A - B K)
  MatrixXcd X;                  // unit-norm closed-loop eigenvectors
  ConditioningReport conditioning;

  // LQR only.
  MatrixXd P;
  double riccati_residual = 0.0;

  // RPA only.
  double initial_abs_det = 0.0;
  std::vector<double> det_history;  // |det X| after init and after each sweep
  int sweeps = 0;
  double imag_gain_norm = 0.0;      // ||Im K|| of the complex-arithmetic gain
  double pole_error = 0.0;          // max_i |lambda_i - lambda_i^d| / |lambda_i^d|
};

struct CareSolution {
  MatrixXd P;
  double residual = 0.0;  // ||A'P + PA - P B R^-1 B' P + Q||_F / ||Q||_F
  int newton_steps = 0;
};

/// Relative CARE residual of a candidate P.
double care_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                     const MatrixXd& R, const MatrixXd& P);

/// Stabilizing solution of A'P + PA - P B R^-1 B' P + Q = 0 from the ordered
/// Schur form of the Hamiltonian, followed by Newton refinement.
/// Throws NotStabilizable when (A, B) has an uncontrollable mode with
/// Re >= 0 or the stable invariant subspace has the wrong dimension.
CareSolution solve_care(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                        const MatrixXd& R);

/// K = R^-1 B' P.
GainDesign lqr_gain(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w);

struct RpaOptions {
  int max_sweeps = 200;
  double rel_tol = 1e-10;     // stop when a sweep improves |det X| by less
  double rank_tol = 1e-10;    // relative to ||[A, B]||_2
  double tie_tol = 1e-14;     // improvements below this keep the old vector
  double degenerate_det = 1e-12;
};

/// Eigenstructure assignment maximizing |det X| over unit-norm eigenvectors
/// chosen from each pole's allowable subspace (cyclic rank-one updates).
/// Throws Uncontrollable (with the pole index) or Degenerate.
GainDesign robust_pole_assignment(const MatrixXd& A, const MatrixXd& B,
                                  const PoleSet& poles, const RpaOptions& opts = {});

/// Throws Degenerate on a numerically singular X.
ConditioningReport conditioning_report(const MatrixXcd& X);

/// Largest relative distance from each desired pole to its nearest achieved one.
double max_relative_pole_error(const VectorXcd& achieved,
                               const std::vector<std::complex<double>>& desired);

/// Orthonormal basis (columns) of the controllable subspace of (A, B).
MatrixXd controllable_subspace(const MatrixXd& A, const MatrixXd& B, double tol = 1e-10);

}  // namespace kanesat
