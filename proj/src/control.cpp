#include "kanesat/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "kanesat/errors.hpp"

namespace kanesat {

namespace {

using cd = std::complex<double>;

bool symmetric(const MatrixXd& m, double tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
}

// Swap adjacent diagonal entries k, k+1 of the upper-triangular T,
// accumulating the unitary similarity into U.
void swap_adjacent(MatrixXcd& T, MatrixXcd& U, Eigen::Index k) {
  const cd a = T(k, k);
  const cd b = T(k + 1, k + 1);
  const cd t = T(k, k + 1);
  const cd d = b - a;
  const double nu = std::hypot(std::abs(t), std::abs(d));
  if (nu == 0.0) return;
  const cd c = t / nu;
  const cd s = d / nu;
  Eigen::Matrix2cd G;
  G << c, -std::conj(s), s, std::conj(c);
  T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * G;
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  T(k + 1, k) = 0.0;
}

// Lyapunov solve A'X + X A = -C via the Kronecker form.
MatrixXd lyapunov(const MatrixXd& A, const MatrixXd& C) {
  const Eigen::Index n = A.rows();
  const MatrixXd I = MatrixXd::Identity(n, n);
  MatrixXd kron(n * n, n * n);
  // vec(A'X) = (I kron A') vec(X); vec(X A) = (A' kron I) vec(X).
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      kron.block(i * n, j * n, n, n) = I(i, j) * A.transpose() + A(j, i) * I;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  const Eigen::VectorXd x = kron.partialPivLu().solve(rhs);
  return sym(Eigen::Map<const MatrixXd>(x.data(), n, n));
}

void require_stabilizable(const MatrixXd& A, const MatrixXd& B) {
  const Eigen::Index n = A.rows();
  const MatrixXd Vc = controllable_subspace(A, B);
  if (Vc.cols() == n) return;
  // Orthonormal complement of the controllable subspace.
  MatrixXd Vu;
  if (Vc.cols() == 0) {
    Vu = MatrixXd::Identity(n, n);
  } else {
    Eigen::HouseholderQR<MatrixXd> qr(Vc);
    const MatrixXd Qf = qr.householderQ() * MatrixXd::Identity(n, n);
    Vu = Qf.rightCols(n - Vc.cols());
  }
  const MatrixXd Auu = Vu.transpose() * A * Vu;
  const Eigen::VectorXcd ev = Auu.eigenvalues();
  const double margin = 1e-9 * std::max(1.0, A.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i).real() >= -margin) {
      throw NotStabilizable("uncontrollable mode with nonnegative real part " +
                            std::to_string(ev(i).real()));
    }
  }
}

}  // namespace

std::string to_string(DesignMethod m) { return m == DesignMethod::Lqr ? "lqr" : "rpa"; }

void LqrWeights::validate(Eigen::Index states, Eigen::Index inputs) const {
  if (Q.rows() != states || Q.cols() != states) {
    throw std::invalid_argument("Q must be " + std::to_string(states) + "x" +
                                std::to_string(states));
  }
  if (R.rows() != inputs || R.cols() != inputs) {
    throw std::invalid_argument("R must be " + std::to_string(inputs) + "x" +
                                std::to_string(inputs));
  }
  if (!symmetric(Q, 1e-12)) throw std::invalid_argument("Q is not symmetric");
  if (!symmetric(R, 1e-12)) throw std::invalid_argument("R is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> qe(sym(Q), Eigen::EigenvaluesOnly);
  if (qe.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, qe.eigenvalues().maxCoeff())) {
    throw std::invalid_argument("Q is not positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> re(sym(R), Eigen::EigenvaluesOnly);
  if (re.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("R is not positive definite");
  }
}

void PoleSet::validate(Eigen::Index states, Eigen::Index input_rank) const {
  if (static_cast<Eigen::Index>(poles.size()) != states) {
    throw std::invalid_argument("pole list must have " + std::to_string(states) +
                                " entries, got " + std::to_string(poles.size()));
  }
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const cd p = poles[i];
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
      throw std::invalid_argument("pole " + std::to_string(i) + " is not finite");
    }
    if (p.real() >= 0.0) {
      throw std::invalid_argument("pole " + std::to_string(i) + " is not in the open left half-plane");
    }
    Eigen::Index multiplicity = 0;
    for (const cd& q : poles) {
      if (std::abs(q - p) <= 1e-12 * std::abs(p)) ++multiplicity;
    }
    if (multiplicity > input_rank) {
      throw std::invalid_argument("pole " + std::to_string(i) + " has multiplicity " +
                                  std::to_string(multiplicity) + " > rank(B) = " +
                                  std::to_string(input_rank));
    }
    if (p.imag() == 0.0 || used[i]) continue;
    bool matched = false;
    for (std::size_t j = 0; j < poles.size(); ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(poles[j] - std::conj(p)) <= 1e-12 * std::abs(p)) {
        used[i] = used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw std::invalid_argument("pole " + std::to_string(i) + " has no conjugate partner");
    }
  }
}

MatrixXd controllable_subspace(const MatrixXd& A, const MatrixXd& B, double tol) {
  const Eigen::Index n = A.rows();
  const double scale = std::max({spectral_norm(A), spectral_norm(B),
                                 std::numeric_limits<double>::min()});
  MatrixXd basis(n, 0);
  MatrixXd frontier = B;
  for (Eigen::Index iter = 0; iter <= n && frontier.cols() > 0 && basis.cols() < n; ++iter) {
    if (basis.cols() > 0) frontier -= basis * (basis.transpose() * frontier);
    Eigen::JacobiSVD<MatrixXd> svd(frontier, Eigen::ComputeThinU);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > tol * scale * std::max(1.0, s(0) / scale)) ++r;
    if (r == 0) break;
    MatrixXd fresh = svd.matrixU().leftCols(r);
    if (basis.cols() > 0) {
      fresh -= basis * (basis.transpose() * fresh);
      Eigen::HouseholderQR<MatrixXd> qr(fresh);
      fresh = qr.householderQ() * MatrixXd::Identity(n, r);
    }
    MatrixXd grown(n, basis.cols() + r);
    grown << basis, fresh;
    basis = grown;
    frontier = A * fresh;
  }
  return basis;
}

double care_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                     const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd K = R.llt().solve(B.transpose() * P);
  const MatrixXd res = A.transpose() * P + P * A - K.transpose() * R * K + Q;
  const double qn = Q.norm();
  return res.norm() / (qn > 0.0 ? qn : 1.0);
}

CareSolution solve_care(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                        const MatrixXd& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw std::invalid_argument("solve_care: inconsistent dimensions");
  }
  Eigen::LLT<MatrixXd> r_llt(sym(R));
  if (r_llt.info() != Eigen::Success) {
    throw std::invalid_argument("solve_care: R is not positive definite");
  }
  require_stabilizable(A, B);

  const MatrixXd G = sym(B * r_llt.solve(B.transpose()));
  // Symplectic scaling P = s P~ balances the off-diagonal Hamiltonian blocks.
  const double gn = G.norm();
  const double qn = Q.norm();
  const double s = (gn > 0.0 && qn > 0.0) ? std::sqrt(qn / gn) : 1.0;

  MatrixXd H(2 * n, 2 * n);
  H << A, -s * G, -Q / s, -A.transpose();

  Eigen::ComplexSchur<MatrixXcd> schur(H.cast<cd>());
  if (schur.info() != Eigen::Success) {
    throw NotStabilizable("Schur decomposition of the Hamiltonian did not converge");
  }
  MatrixXcd T = schur.matrixT();
  MatrixXcd U = schur.matrixU();

  const double axis_tol = 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff());
  Eigen::Index stable = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) <= axis_tol) {
      throw NotStabilizable("Hamiltonian has an eigenvalue on the imaginary axis");
    }
    if (re < 0.0) ++stable;
  }
  if (stable != n) {
    throw NotStabilizable("stable invariant subspace has dimension " + std::to_string(stable) +
                          ", expected " + std::to_string(n));
  }
  // Bubble stable eigenvalues to the leading block.
  Eigen::Index head = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (T(i, i).real() < 0.0) {
      for (Eigen::Index k = i; k > head; --k) swap_adjacent(T, U, k - 1);
      ++head;
    }
  }

  const MatrixXcd U11 = U.topLeftCorner(n, n);
  const MatrixXcd U21 = U.bottomLeftCorner(n, n);
  // P~ U11 = U21.
  Eigen::FullPivLU<MatrixXcd> lu(U11.transpose());
  if (!lu.isInvertible()) throw NotStabilizable("stable subspace basis U11 is singular");
  const MatrixXcd Pc = lu.solve(U21.transpose()).transpose();

  CareSolution out;
  out.P = s * sym(Pc.real());
  out.residual = care_residual(A, B, Q, R, out.P);

  // Newton (Kleinman) refinement in correction form.
  constexpr int kMaxNewton = 4;
  for (int it = 0; it < kMaxNewton && out.residual > 1e-14; ++it) {
    const MatrixXd K = r_llt.solve(B.transpose() * out.P);
    const MatrixXd Ak = A - B * K;
    const MatrixXd res = A.transpose() * out.P + out.P * A - K.transpose() * R * K + Q;
    const MatrixXd candidate = sym(out.P + lyapunov(Ak, res));
    const double cr = care_residual(A, B, Q, R, candidate);
    if (!(cr < out.residual)) break;
    out.P = candidate;
    out.residual = cr;
    ++out.newton_steps;
  }
  return out;
}

ConditioningReport conditioning_report(const MatrixXcd& X) {
  if (X.rows() != X.cols() || X.rows() == 0) {
    throw Degenerate("eigenvector matrix must be square and nonempty");
  }
  ConditioningReport rep;
  Eigen::PartialPivLU<MatrixXcd> lu(X);
  rep.abs_det = std::abs(lu.determinant());
  Eigen::JacobiSVD<MatrixXcd> svd(X);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(rep.abs_det > 0.0) || !(smin > 0.0) || smin <= 1e-15 * sv(0)) {
    throw Degenerate("eigenvector matrix is numerically singular");
  }
  rep.cond2 = sv(0) / smin;
  const MatrixXcd Xinv = lu.inverse();
  rep.eigen_condition.resize(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    rep.eigen_condition(i) = Xinv.row(i).norm() * X.col(i).norm();
  }
  return rep;
}

double max_relative_pole_error(const VectorXcd& achieved,
                               const std::vector<std::complex<double>>& desired) {
  // Greedy one-to-one matching, nearest first.
  std::vector<bool> taken(static_cast<std::size_t>(achieved.size()), false);
  double worst = 0.0;
  for (const cd& d : desired) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = -1;
    for (Eigen::Index i = 0; i < achieved.size(); ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double e = std::abs(achieved(i) - d);
      if (e < best) {
        best = e;
        arg = i;
      }
    }
    if (arg < 0) return std::numeric_limits<double>::infinity();
    taken[static_cast<std::size_t>(arg)] = true;
    worst = std::max(worst, best / std::abs(d));
  }
  return worst;
}

namespace {

MatrixXcd unit_eigenvectors(const MatrixXd& M, VectorXcd* values) {
  Eigen::EigenSolver<MatrixXd> es(M);
  *values = es.eigenvalues();
  MatrixXcd X = es.eigenvectors();
  for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j).normalize();
  return X;
}

}  // namespace

GainDesign lqr_gain(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w) {
  w.validate(A.rows(), B.cols());
  const CareSolution care = solve_care(A, B, w.Q, w.R);
  GainDesign d;
  d.method = DesignMethod::Lqr;
  d.P = care.P;
  d.riccati_residual = care.residual;
  d.K = w.R.llt().solve(B.transpose() * care.P);
  d.X = unit_eigenvectors(A - B * d.K, &d.closed_loop_poles);
  for (Eigen::Index i = 0; i < d.closed_loop_poles.size(); ++i) {
    if (!(d.closed_loop_poles(i).real() < 0.0)) {
      throw NotStabilizable("LQR closed loop has a non-negative real eigenvalue");
    }
  }
  try {
    d.conditioning = conditioning_report(d.X);
  } catch (const Degenerate&) {
    // Defective closed loop; conditioning is undefined but the gain stands.
    d.conditioning.abs_det = 0.0;
    d.conditioning.cond2 = std::numeric_limits<double>::infinity();
  }
  return d;
}

// ---------------------------------------------------------------------------
// Robust pole assignment.

namespace {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Canonical orthonormal basis of the x-part of ker[A - lambda I, B]: the
// subspace is fixed first, then a basis is read off its orthogonal projector
// by pivoted QR so the result does not depend on SVD sign/rotation choices.
template <class Scalar>
Mat<Scalar> allowable_basis(const MatrixXd& A, const MatrixXd& B, Scalar lambda,
                            double abs_tol) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Mat<Scalar> N(n, n + m);
  N.leftCols(n) = A.template cast<Scalar>() - lambda * Mat<Scalar>::Identity(n, n);
  N.rightCols(m) = B.template cast<Scalar>();
  Eigen::JacobiSVD<Mat<Scalar>> svd(N, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > abs_tol) ++rank;
  const Eigen::Index nullity = n + m - rank;
  if (nullity == 0) return Mat<Scalar>(n, 0);
  const Mat<Scalar> xpart = svd.matrixV().topRightCorner(n, nullity);

  Eigen::JacobiSVD<Mat<Scalar>> xs(xpart, Eigen::ComputeThinU);
  const Eigen::VectorXd& xsv = xs.singularValues();
  if (xsv.size() == 0 || xsv(0) <= 1e-10) return Mat<Scalar>(n, 0);
  Eigen::Index d = 0;
  while (d < xsv.size() && xsv(d) > 1e-10 * xsv(0)) ++d;
  const Mat<Scalar> range = xs.matrixU().leftCols(d);
  const Mat<Scalar> proj = range * range.adjoint();
  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(proj);
  Mat<Scalar> basis = qr.householderQ() * Mat<Scalar>::Identity(n, d);
  // Re-project to remove round-off outside the subspace.
  basis = range * (range.adjoint() * basis);
  Eigen::HouseholderQR<Mat<Scalar>> clean(basis);
  Mat<Scalar> q = clean.householderQ() * Mat<Scalar>::Identity(n, d);
  // Fix signs/phases so the diagonal of R is real positive.
  const Mat<Scalar> r = clean.matrixQR().topRows(d).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    const Scalar rj = r(j, j);
    if (std::abs(rj) > 0.0) q.col(j) *= rj / Scalar(std::abs(rj));
  }
  return q;
}

// Unit vector spanning the orthogonal complement of the columns of Y (n x n-1),
// or an orthonormal basis of the 2-dim complement when Y is n x n-2.
MatrixXd complement(const MatrixXd& Y, Eigen::Index n) {
  const Eigen::Index k = n - Y.cols();
  if (Y.cols() == 0) return MatrixXd::Identity(n, k);
  Eigen::HouseholderQR<MatrixXd> qr(Y);
  const MatrixXd Qf = qr.householderQ() * MatrixXd::Identity(n, n);
  return Qf.rightCols(k);
}

// One entry per independent pole: a real pole or the upper member of a pair.
struct Slot {
  std::size_t pole;       // index into the pole list
  std::size_t partner;    // conjugate index (== pole for real)
  bool complex = false;
  Eigen::Index col = 0;   // first real column in Xr
  MatrixXcd basis;        // allowable subspace (complex for pairs)
  MatrixXd basis_real;    // allowable subspace (real poles)
};

double abs_det(const MatrixXd& X) { return std::abs(X.partialPivLu().determinant()); }

// Fix the phase of a complex vector: largest-magnitude entry real positive.
Eigen::VectorXcd phase_fixed(Eigen::VectorXcd v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  const cd a = v(arg);
  if (std::abs(a) > 0.0) v *= std::conj(a) / std::abs(a);
  return v;
}

}  // namespace

GainDesign robust_pole_assignment(const MatrixXd& A, const MatrixXd& B, const PoleSet& poles,
                                  const RpaOptions& opts) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n) {
    throw std::invalid_argument("robust_pole_assignment: inconsistent dimensions");
  }
  Eigen::JacobiSVD<MatrixXd> bsvd(B, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const Eigen::VectorXd& bs = bsvd.singularValues();
  Eigen::Index rank_b = 0;
  while (rank_b < bs.size() && bs(rank_b) > 1e-12 * std::max(bs(0), 1e-300)) ++rank_b;
  poles.validate(n, std::max<Eigen::Index>(rank_b, 1));

  MatrixXd AB(n, n + m);
  AB << A, B;
  const double abs_tol = opts.rank_tol * spectral_norm(AB);

  // Allowable subspaces, pairing conjugates.
  const auto& pl = poles.poles;
  std::vector<Slot> slots;
  std::vector<bool> assigned(pl.size(), false);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < pl.size(); ++i) {
    if (assigned[i]) continue;
    Slot s;
    s.pole = s.partner = i;
    s.col = col;
    if (pl[i].imag() == 0.0) {
      s.basis_real = allowable_basis<double>(A, B, pl[i].real(), abs_tol);
      if (s.basis_real.cols() == 0) {
        throw Uncontrollable("pole " + std::to_string(i) + " has a trivial allowable subspace",
                             i);
      }
      assigned[i] = true;
      col += 1;
    } else {
      for (std::size_t j = i + 1; j < pl.size(); ++j) {
        if (!assigned[j] && std::abs(pl[j] - std::conj(pl[i])) <= 1e-12 * std::abs(pl[i])) {
          s.partner = j;
          break;
        }
      }
      s.complex = true;
      // Work with the member having positive imaginary part.
      if (pl[i].imag() < 0.0) std::swap(s.pole, s.partner);
      s.basis = allowable_basis<cd>(A, B, pl[s.pole], abs_tol);
      if (s.basis.cols() == 0) {
        throw Uncontrollable("pole " + std::to_string(s.pole) +
                                 " has a trivial allowable subspace",
                             s.pole);
      }
      assigned[s.pole] = assigned[s.partner] = true;
      col += 2;
    }
    slots.push_back(std::move(s));
  }

  // Real representation: real pole -> x; pair -> [Re x, Im x].
  MatrixXd Xr = MatrixXd::Zero(n, n);

  // Greedy initialization over the canonical basis vectors.
  {
    MatrixXd chosen(n, 0);
    for (Slot& s : slots) {
      const auto residual_norm = [&](const Eigen::VectorXcd& v) {
        if (chosen.cols() == 0) return v.norm();
        const MatrixXcd C = chosen.cast<cd>();
        return (v - C * (C.adjoint() * v)).norm();
      };
      const MatrixXcd basis = s.complex ? s.basis : MatrixXcd(s.basis_real.cast<cd>());
      Eigen::Index best = 0;
      double best_norm = -1.0;
      for (Eigen::Index j = 0; j < basis.cols(); ++j) {
        const double r = residual_norm(basis.col(j));
        if (r > best_norm + 1e-14) {
          best_norm = r;
          best = j;
        }
      }
      if (s.complex) {
        const Eigen::VectorXcd x = phase_fixed(basis.col(best));
        Xr.col(s.col) = x.real();
        Xr.col(s.col + 1) = x.imag();
      } else {
        Xr.col(s.col) = s.basis_real.col(best);
      }
      // Extend an orthonormal basis of the chosen span.
      const Eigen::Index add = s.complex ? 2 : 1;
      MatrixXd cand(n, chosen.cols() + add);
      cand << chosen, Xr.middleCols(s.col, add);
      Eigen::JacobiSVD<MatrixXd> cs(cand, Eigen::ComputeThinU);
      Eigen::Index r = 0;
      while (r < cs.singularValues().size() &&
             cs.singularValues()(r) > 1e-12 * cs.singularValues()(0)) {
        ++r;
      }
      chosen = cs.matrixU().leftCols(r);
    }
  }

  GainDesign d;
  d.method = DesignMethod::Rpa;
  // |det X| of the complex unit-column matrix: each pair contributes a factor 2.
  Eigen::Index pairs = 0;
  for (const Slot& s : slots) pairs += s.complex ? 1 : 0;
  const double pair_scale = std::pow(2.0, static_cast<double>(pairs));

  double det = abs_det(Xr);
  d.initial_abs_det = det * pair_scale;
  d.det_history.push_back(d.initial_abs_det);

  const auto others = [&](Eigen::Index first, Eigen::Index count) {
    MatrixXd Y(n, n - count);
    Y << Xr.leftCols(first), Xr.rightCols(n - first - count);
    return Y;
  };

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    const double det_start = det;
    for (Slot& s : slots) {
      if (!s.complex) {
        const Eigen::VectorXd y = complement(others(s.col, 1), n).col(0);
        Eigen::VectorXd x = s.basis_real * (s.basis_real.transpose() * y);
        const double xn = x.norm();
        if (xn <= 0.0) continue;
        x /= xn;
        const Eigen::VectorXd old = Xr.col(s.col);
        Xr.col(s.col) = x;
        const double trial = abs_det(Xr);
        if (trial - det > opts.tie_tol * det) {
          det = trial;
        } else {
          Xr.col(s.col) = old;
        }
      } else {
        const MatrixXd Yc = complement(others(s.col, 2), n);
        const MatrixXcd Gm = Yc.transpose().cast<cd>() * s.basis;
        // det scales with |Im(z1 conj z2)| where z = Gm c, unit c.
        const Eigen::RowVectorXcd r1 = Gm.row(0);
        const Eigen::RowVectorXcd r2 = Gm.row(1);
        const MatrixXcd Nm = r2.adjoint() * r1;
        const MatrixXcd Hm = (Nm - Nm.adjoint()) / cd(0.0, 2.0);
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(Hm);
        const Eigen::VectorXd& ev = es.eigenvalues();
        const Eigen::Index pick =
            std::abs(ev(0)) > std::abs(ev(ev.size() - 1)) ? 0 : ev.size() - 1;
        const Eigen::VectorXcd x = phase_fixed(s.basis * es.eigenvectors().col(pick));
        const MatrixXd old = Xr.middleCols(s.col, 2);
        Xr.col(s.col) = x.real();
        Xr.col(s.col + 1) = x.imag();
        const double trial = abs_det(Xr);
        if (trial - det > opts.tie_tol * det) {
          det = trial;
        } else {
          Xr.middleCols(s.col, 2) = old;
        }
      }
    }
    d.sweeps = sweep + 1;
    d.det_history.push_back(det * pair_scale);
    if (det - det_start <= opts.rel_tol * det_start) break;
  }

  if (det * pair_scale < opts.degenerate_det) {
    throw Degenerate("eigenvector matrix is numerically singular (|det X| = " +
                     std::to_string(det * pair_scale) + ")");
  }

  // Closed-loop matrix M = X Lambda X^-1 in the real block form.
  MatrixXd Lr = MatrixXd::Zero(n, n);
  MatrixXcd Xc(n, n);
  Eigen::VectorXcd lam(n);
  for (const Slot& s : slots) {
    const cd p = pl[s.pole];
    if (!s.complex) {
      Lr(s.col, s.col) = p.real();
      Xc.col(s.col) = Xr.col(s.col).cast<cd>();
      lam(s.col) = p;
    } else {
      // A [xr xi] = [xr xi] [[a, b], [-b, a]] for lambda = a + ib.
      Lr(s.col, s.col) = p.real();
      Lr(s.col, s.col + 1) = p.imag();
      Lr(s.col + 1, s.col) = -p.imag();
      Lr(s.col + 1, s.col + 1) = p.real();
      const Eigen::VectorXcd x = Xr.col(s.col).cast<cd>() + cd(0, 1) * Xr.col(s.col + 1).cast<cd>();
      Xc.col(s.col) = x;
      Xc.col(s.col + 1) = x.conjugate();
      lam(s.col) = p;
      lam(s.col + 1) = std::conj(p);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) Xc.col(j).normalize();

  // B = U0 Z with U0 orthonormal (rank_b columns); K = Z^+ U0' (A - M).
  const MatrixXd U0 = bsvd.matrixU().leftCols(rank_b);
  const MatrixXd Zpinv = bsvd.matrixV().leftCols(rank_b) *
                         bs.head(rank_b).cwiseInverse().asDiagonal();
  const MatrixXd M = Xr * Lr * Xr.partialPivLu().inverse();
  d.K = Zpinv * U0.transpose() * (A - M);

  const MatrixXcd Mc = Xc * lam.asDiagonal() * Xc.partialPivLu().inverse();
  const MatrixXcd Kc = Zpinv.cast<cd>() * U0.transpose().cast<cd>() * (A.cast<cd>() - Mc);
  d.imag_gain_norm = Kc.imag().norm();

  d.X = Xc;
  d.conditioning = conditioning_report(Xc);
  // Same quantity, but keep the optimizer's bits so history and report agree.
  d.conditioning.abs_det = d.det_history.back();
  Eigen::EigenSolver<MatrixXd> es(A - B * d.K, false);
  d.closed_loop_poles = es.eigenvalues();
  d.pole_error = max_relative_pole_error(d.closed_loop_poles, pl);
  return d;
}

}  // namespace kanesat
