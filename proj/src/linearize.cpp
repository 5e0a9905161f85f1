#include "kanesat/linearize.hpp"

#include <algorithm>
#include <cmath>

#include "kanesat/errors.hpp"

namespace kanesat {

BlockSolution block_reduced_solve(const Mat88& L, const Vec8& p) {
  const Eigen::Matrix<double, 5, 5> l1 = L.topLeftCorner<5, 5>();
  const Eigen::Matrix<double, 5, 3> l2 = L.topRightCorner<5, 3>();
  const Mat3 l3 = L.bottomRightCorner<3, 3>();
  const Eigen::Matrix<double, 5, 1> p1 = p.head<5>();
  const Vec3 p2 = p.tail<3>();

  Eigen::LLT<Mat3> l3_llt(l3);
  if (l3_llt.info() != Eigen::Success) {
    throw SingularBlock("L3 (translational block) is not positive definite");
  }
  const Eigen::Matrix<double, 3, 5> l3_inv_l2t = l3_llt.solve(l2.transpose());
  const Vec3 l3_inv_p2 = l3_llt.solve(p2);

  Eigen::Matrix<double, 5, 5> schur = l1 - l2 * l3_inv_l2t;
  schur = 0.5 * (schur + schur.transpose());
  Eigen::LLT<Eigen::Matrix<double, 5, 5>> schur_llt(schur);
  if (schur_llt.info() != Eigen::Success) {
    throw SingularBlock("Schur complement L1 - L2 L3^-1 L2' is not positive definite");
  }

  BlockSolution out;
  out.rotational = schur_llt.solve(p1 - l2 * l3_inv_p2);
  out.translational = l3_llt.solve(p2 - l2.transpose() * out.rotational);
  return out;
}

Equilibrium Equilibrium::at(const AttitudeState& s) {
  if (s.omega != Vec3::Zero() || s.sigma1 != 0.0 || s.sigma2 != 0.0) {
    throw NotEquilibrium("equilibrium state must have zero body and gimbal rates");
  }
  return Equilibrium{s};
}

Equilibrium Equilibrium::at(EulerAngles321 euler, double gamma, double lambda) {
  AttitudeState s;
  s.euler = euler;
  s.gamma = gamma;
  s.lambda = lambda;
  return at(s);
}

double find_equilibrium_residual(const ChainConfig& cfg, const AttitudeState& x) {
  return state_derivative(cfg, x.to_vector(), InputVector::Zero()).cwiseAbs().maxCoeff();
}

namespace {

Eigen::MatrixXd central_difference(const PlantFunction& f, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& u0, bool wrt_state,
                                   double step) {
  const Eigen::VectorXd& z0 = wrt_state ? x0 : u0;
  const Eigen::Index rows = f(x0, u0).size();
  Eigen::MatrixXd jac(rows, z0.size());
  for (Eigen::Index i = 0; i < z0.size(); ++i) {
    const double h = std::max(step, step * std::abs(z0(i)));
    Eigen::VectorXd plus = z0, minus = z0;
    plus(i) += h;
    minus(i) -= h;
    const Eigen::VectorXd fp = wrt_state ? f(plus, u0) : f(x0, plus);
    const Eigen::VectorXd fm = wrt_state ? f(minus, u0) : f(x0, minus);
    jac.col(i) = (fp - fm) / (plus(i) - minus(i));
  }
  return jac;
}

Eigen::MatrixXd richardson(const PlantFunction& f, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& u0, bool wrt_state,
                           const LinearizeOptions& opts) {
  const Eigen::MatrixXd coarse = central_difference(f, x0, u0, wrt_state, opts.fd_step);
  if (!opts.richardson) return coarse;
  const Eigen::MatrixXd fine = central_difference(f, x0, u0, wrt_state, 0.5 * opts.fd_step);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace

Jacobians numerical_jacobians(const PlantFunction& f, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& u0, const LinearizeOptions& opts) {
  return {richardson(f, x0, u0, true, opts), richardson(f, x0, u0, false, opts)};
}

LinearModel linearize(const ChainConfig& cfg, const Equilibrium& eq,
                      const LinearizeOptions& opts) {
  const PlantFunction plant = [&cfg](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(
        state_derivative(cfg, StateVector(x), InputVector(u), SolvePath::BlockReduced));
  };

  LinearModel model;
  model.equilibrium = eq;
  model.fd_step = opts.fd_step;
  model.equilibrium_residual = find_equilibrium_residual(cfg, eq.state);

  const Jacobians jac = numerical_jacobians(
      plant, eq.state.to_vector(), Eigen::VectorXd::Zero(5), opts);
  model.A = jac.dfdx;
  model.B = jac.dfdu;
  return model;
}

}  // namespace kanesat
