#include "kanesat/control.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kanesat/errors.hpp"
#include "oracle/ackermann.hpp"

namespace kanesat {
namespace {

using cd = std::complex<double>;

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }

TEST(Care, ScalarIntegrator) {
  const CareSolution s = solve_care(m1(0.0), m1(1.0), m1(1.0), m1(1.0));
  EXPECT_NEAR(s.P(0, 0), 1.0, 1e-12);
  EXPECT_LT(s.residual, 1e-8);
}

TEST(Care, ScalarStableWithoutInput) {
  const CareSolution s = solve_care(m1(-1.0), m1(0.0), m1(1.0), m1(1.0));
  EXPECT_NEAR(s.P(0, 0), 0.5, 1e-12);
}

TEST(Care, UnstableWithoutInputIsNotStabilizable) {
  EXPECT_THROW(solve_care(m1(1.0), m1(0.0), m1(1.0), m1(1.0)), NotStabilizable);
  MatrixXd A(2, 2);
  A << 0, 1, 0, 0;
  EXPECT_THROW(solve_care(A, MatrixXd::Zero(2, 1), MatrixXd::Identity(2, 2), m1(1.0)),
               NotStabilizable);
}

TEST(Care, TextbookTwoState) {
  MatrixXd A(2, 2), B(2, 1), Q(2, 2);
  A << -3, 2, 1, 1;
  B << 0, 1;
  Q << 3, 0, 0, 3;
  const CareSolution s = solve_care(A, B, Q, m1(3.0));
  EXPECT_LT(s.residual, 1e-12);
  EXPECT_LT((s.P - s.P.transpose()).norm(), 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.P);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Care, RandomSystemsResidualAndStability) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 8, m = 1 + trial % 3;
    MatrixXd A(n, n), B(n, m), C(n, n);
    for (int i = 0; i < A.size(); ++i) A(i) = g(rng);
    for (int i = 0; i < B.size(); ++i) B(i) = g(rng);
    for (int i = 0; i < C.size(); ++i) C(i) = g(rng);
    const MatrixXd Q = C * C.transpose() + 1e-2 * MatrixXd::Identity(n, n);
    const MatrixXd R = MatrixXd::Identity(m, m);
    const GainDesign d = lqr_gain(A, B, {Q, R});
    EXPECT_LT(d.riccati_residual, 1e-8);
    for (int i = 0; i < n; ++i) EXPECT_LT(d.closed_loop_poles(i).real(), 0.0);
  }
}

TEST(Lqr, ScalarAndDoubleIntegrator) {
  const GainDesign s = lqr_gain(m1(0.0), m1(1.0), {m1(1.0), m1(1.0)});
  EXPECT_NEAR(s.K(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.closed_loop_poles(0).real(), -1.0, 1e-12);

  MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const GainDesign d = lqr_gain(A, B, {MatrixXd::Identity(2, 2), m1(1.0)});
  EXPECT_NEAR(d.K(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(d.K(0, 1), std::sqrt(3.0), 1e-10);
}

TEST(Lqr, WeightValidation) {
  MatrixXd Q = MatrixXd::Identity(2, 2);
  Q(0, 1) = 0.5;
  EXPECT_THROW((LqrWeights{Q, m1(1.0)}.validate(2, 1)), std::invalid_argument);
  EXPECT_THROW((LqrWeights{-MatrixXd::Identity(2, 2), m1(1.0)}.validate(2, 1)),
               std::invalid_argument);
  EXPECT_THROW((LqrWeights{MatrixXd::Identity(2, 2), m1(0.0)}.validate(2, 1)),
               std::invalid_argument);
}

TEST(PoleSetValidation, Invariants) {
  EXPECT_NO_THROW((PoleSet{{-1.0, cd(-1, 2), cd(-1, -2)}}.validate(3, 1)));
  EXPECT_THROW((PoleSet{{-1.0, cd(-1, 2), -3.0}}.validate(3, 1)), std::invalid_argument);
  EXPECT_THROW((PoleSet{{-1.0, 0.5}}.validate(2, 2)), std::invalid_argument);
  EXPECT_THROW((PoleSet{{-1.0, -1.0}}.validate(2, 1)), std::invalid_argument);
  EXPECT_NO_THROW((PoleSet{{-1.0, -1.0}}.validate(2, 2)));
  EXPECT_THROW((PoleSet{{-1.0}}.validate(2, 2)), std::invalid_argument);
}

TEST(Rpa, FullInputDiagonal) {
  MatrixXd A = MatrixXd::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 2.0;
  const GainDesign d = robust_pole_assignment(A, MatrixXd::Identity(2, 2), {{-1.0, -2.0}});
  MatrixXd expected = MatrixXd::Zero(2, 2);
  expected(0, 0) = 2.0;
  expected(1, 1) = 4.0;
  EXPECT_LT((d.K - expected).norm(), 1e-12);
  EXPECT_NEAR(d.conditioning.abs_det, 1.0, 1e-12);
}

TEST(Rpa, DoubleIntegratorMatchesAckermann) {
  MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const GainDesign d = robust_pole_assignment(A, B, {{-1.0, -2.0}});
  EXPECT_NEAR(d.K(0, 0), 2.0, 1e-10);
  EXPECT_NEAR(d.K(0, 1), 3.0, 1e-10);
  EXPECT_LT(d.pole_error, 1e-10);
}

TEST(Rpa, SingleInputRandomMatchesAckermann) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 3;
    MatrixXd A(n, n), B(n, 1);
    for (int i = 0; i < A.size(); ++i) A(i) = g(rng);
    for (int i = 0; i < B.size(); ++i) B(i) = g(rng);
    std::vector<cd> poles;
    for (int i = 0; i < n; ++i) poles.emplace_back(-1.0 - 0.5 * i, 0.0);
    if (trial % 2 == 1) {
      poles[0] = cd(-1.0, 0.7);
      poles[1] = cd(-1.0, -0.7);
    }
    const GainDesign d = robust_pole_assignment(A, B, {poles});
    const Eigen::RowVectorXd k = oracle::ackermann(A, B.col(0), poles);
    EXPECT_LT((d.K.row(0) - k).norm(), 1e-8 * k.norm()) << "trial " << trial;
  }
}

TEST(Rpa, ComplexPairsGiveRealGainAndMonotoneDeterminant) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6, m = 2 + trial % 2;
    MatrixXd A(n, n), B(n, m);
    for (int i = 0; i < A.size(); ++i) A(i) = g(rng);
    for (int i = 0; i < B.size(); ++i) B(i) = g(rng);
    const std::vector<cd> poles{cd(-1, 1), cd(-1, -1), -2.0, -3.0, cd(-0.5, 2), cd(-0.5, -2)};
    const GainDesign d = robust_pole_assignment(A, B, {poles});
    EXPECT_LT(d.imag_gain_norm, 1e-10);
    EXPECT_LT(d.pole_error, 1e-6);
    for (std::size_t i = 1; i < d.det_history.size(); ++i) {
      EXPECT_GE(d.det_history[i], d.det_history[i - 1]);
    }
    EXPECT_GE(d.conditioning.abs_det, d.initial_abs_det);
    EXPECT_EQ(d.conditioning.abs_det, d.det_history.back());
    for (int j = 0; j < n; ++j) EXPECT_NEAR(d.X.col(j).norm(), 1.0, 1e-12);
  }
}

TEST(Rpa, Deterministic) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd A(5, 5), B(5, 2);
  for (int i = 0; i < A.size(); ++i) A(i) = g(rng);
  for (int i = 0; i < B.size(); ++i) B(i) = g(rng);
  const PoleSet p{{-1.0, -2.0, -3.0, cd(-1, 1), cd(-1, -1)}};
  EXPECT_EQ(robust_pole_assignment(A, B, p).K, robust_pole_assignment(A, B, p).K);
}

TEST(Rpa, ZeroInputIsUncontrollable) {
  MatrixXd A(2, 2);
  A << 0, 1, 0, 0;
  try {
    robust_pole_assignment(A, MatrixXd::Zero(2, 1), {{-1.0, -2.0}});
    FAIL() << "expected Uncontrollable";
  } catch (const Uncontrollable& e) {
    EXPECT_EQ(e.pole_index(), 0u);
  }
}

TEST(Rpa, UncontrollableModeIsDegenerate) {
  // Second state is decoupled from the input: every allowable vector lies in
  // span(e1), so X cannot be made nonsingular.
  MatrixXd A = MatrixXd::Zero(2, 2);
  A(1, 1) = 1.0;
  MatrixXd B(2, 1);
  B << 1, 0;
  EXPECT_THROW(robust_pole_assignment(A, B, {{-1.0, -2.0}}), Error);
}

TEST(Conditioning, Values) {
  const ConditioningReport id = conditioning_report(MatrixXcd::Identity(3, 3));
  EXPECT_NEAR(id.abs_det, 1.0, 1e-15);
  EXPECT_NEAR(id.cond2, 1.0, 1e-15);
  EXPECT_TRUE(id.eigen_condition.isApproxToConstant(1.0, 1e-15));

  MatrixXcd X(2, 2);
  X << 1.0, 1.0, 0.0, 1e-6;
  X.col(1).normalize();
  EXPECT_GT(conditioning_report(X).cond2, 1e5);

  MatrixXcd S(2, 2);
  S << 1.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(conditioning_report(S), Degenerate);
}

TEST(ControllableSubspace, Dimensions) {
  MatrixXd A(3, 3);
  A << 0, 1, 0, 0, 0, 0, 0, 0, -1;
  MatrixXd B(3, 1);
  B << 0, 1, 0;
  EXPECT_EQ(controllable_subspace(A, B).cols(), 2);
  EXPECT_EQ(controllable_subspace(A, MatrixXd::Zero(3, 1)).cols(), 0);
  // Stable uncontrollable mode is still stabilizable.
  EXPECT_NO_THROW(solve_care(A, B, MatrixXd::Identity(3, 3), m1(1.0)));
}

}  // namespace
}  // namespace kanesat
