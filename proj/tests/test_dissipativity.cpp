// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "mgc/dissipativity.hpp"
#include "mgc/errors.hpp"

using namespace mgc;
using Eigen::MatrixXd;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST(SupplyRate, Passive) {
  EXPECT_TRUE(make_passive(1).full().isApprox(mat2(0, 0.5, 0.5, 0)));
}

TEST(SupplyRate, Ifofp) {
  EXPECT_TRUE(make_ifofp(-1.0, 0.5, 1).full().isApprox(mat2(1, 0.5, 0.5, -0.5)));
}

TEST(SupplyRate, L2Gain) {
  EXPECT_TRUE(make_l2gain(2.0, 1).full().isApprox(mat2(4, 0, 0, -1)));
}

TEST(CheckXeid, IntegratorWithLossIsPassive) {
  const XeidResult r = check_xeid(m1(-1), m1(1), m1(1), m1(0), make_passive(1));
  ASSERT_TRUE(r.feasible()) << r.diagnostics;
  const MatrixXd M = dissipation_matrix(m1(-1), m1(1), m1(1), m1(0), make_passive(1),
                                        r.certificate->P);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(M).eigenvalues().minCoeff(), -1e-9);
}

TEST(CheckXeid, DissipationMatrixAtHalf) {
  const MatrixXd M = dissipation_matrix(m1(-1), m1(1), m1(1), m1(0), make_passive(1), m1(0.5));
  EXPECT_TRUE(M.isApprox(mat2(1, 0, 0, 0)));
  const MatrixXd N =
      dissipation_matrix(m1(-1), m1(1), m1(1), m1(0), make_ifofp(-1, 0.5, 1), m1(0.5));
  EXPECT_TRUE(N.isApprox(mat2(0.5, 0, 0, 1)));
  const MatrixXd Q = dissipation_matrix(m1(-1), m1(1), m1(1), m1(0), make_passive(1), m1(0.4));
  EXPECT_NEAR(Q(0, 1), 0.1, 1e-12);
  EXPECT_LT(Eigen::SelfAdjointEigenSolver<MatrixXd>(Q).eigenvalues().minCoeff(), 0.0);
}

TEST(CheckXeid, IfofpFeasible) {
  EXPECT_TRUE(check_xeid(m1(-1), m1(1), m1(1), m1(0), make_ifofp(-1, 0.5, 1)).feasible());
}

TEST(CheckXeid, UnstableSystemInfeasible) {
  const XeidResult r = check_xeid(m1(1), m1(1), m1(1), m1(0), make_ifofp(-1, 0.5, 1));
  EXPECT_FALSE(r.feasible());
}

TEST(SynthLocal, SynthesisMatrixMinors) {
  const MatrixXd M = synthesis_matrix(m1(0), m1(1), make_ifofp(-1, 1, 1), m1(1), m1(-2));
  ASSERT_EQ(M.rows(), 3);
  EXPECT_NEAR(M(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(M.topLeftCorner(2, 2).determinant(), 3.0, 1e-12);
  EXPECT_NEAR(M.determinant(), 2.75, 1e-12);
  EXPECT_NEAR(recover_gain(m1(-2), m1(1))(0, 0), -2.0, 1e-12);
}

TEST(SynthLocal, PassiveTargetRejected) {
  try {
    synth_local_xeid(m1(0), m1(1), make_passive(1));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::X22NotNegative);
  }
}

TEST(SynthLocal, L2GainTargetAccepted) {
  const LocalSynthOutcome r = synth_local_xeid(m1(0), m1(1), make_l2gain(2.0, 1));
  EXPECT_TRUE(r.feasible()) << r.diagnostics;
}

TEST(SynthLocal, RecoverGainInvertsStorage) {
  MatrixXd P(2, 2);
  P << 2, 0.3, 0.3, 1;
  MatrixXd K(1, 2);
  K << 0.7, -1.1;
  EXPECT_TRUE((recover_gain(K, P) * P).isApprox(K, 1e-12));
}

TEST(SynthLocal, RoundTripOnRandomSystems) {
  std::mt19937 rng(7);
  std::normal_distribution<double> g;
  int certified = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd A = MatrixXd::NullaryExpr(2, 2, [&] { return g(rng); });
    const MatrixXd B = MatrixXd::NullaryExpr(2, 2, [&] { return g(rng); });
    const SupplyRate X = make_ifofp(-0.5, 0.5, 2);
    const LocalSynthOutcome r = synth_local_xeid(A, B, X);
    if (!r.feasible()) continue;
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const XeidResult c = check_xeid(A + B * r.result->L, I, I, MatrixXd::Zero(2, 2), X);
    EXPECT_TRUE(c.feasible()) << "trial " << trial << ": " << c.diagnostics;
    ++certified;
  }
  EXPECT_GT(certified, 5);
}
