#pragma once

// Ackermann's formula for single-input pole placement:
//   K = e_n' C^-1 phi(A),  C = [b, A b, ..., A^(n-1) b],  phi = prod (s - p_i).

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace kanesat::oracle {

inline Eigen::RowVectorXd ackermann(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                    const std::vector<std::complex<double>>& poles) {
  const Eigen::Index n = A.rows();
  // Monic characteristic polynomial coefficients, highest power first.
  std::vector<std::complex<double>> coeff{1.0};
  for (const auto& p : poles) {
    std::vector<std::complex<double>> next(coeff.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      next[i] += coeff[i];
      next[i + 1] -= p * coeff[i];
    }
    coeff = next;
  }
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    phi = phi * A + coeff[i].real() * Eigen::MatrixXd::Identity(n, n);
  }
  Eigen::MatrixXd C(n, n);
  C.col(0) = b;
  for (Eigen::Index i = 1; i < n; ++i) C.col(i) = A * C.col(i - 1);
  Eigen::RowVectorXd en = Eigen::RowVectorXd::Zero(n);
  en(n - 1) = 1.0;
  return en * C.inverse() * phi;
}

}  // namespace kanesat::oracle
