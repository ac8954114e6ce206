// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "mgc/errors.hpp"
#include "mgc/lmi.hpp"
#include "mgc/lmi_kernels.hpp"

using namespace mgc::lmi;
using Eigen::MatrixXd;

TEST(LinExpr, ArithmeticAndCompact) {
  Var a{0}, b{1};
  LinExpr e = 2.0 * LinExpr(a) + LinExpr::term(b, 3.0) - LinExpr(a) + LinExpr(4.0);
  e.compact();
  EXPECT_EQ(e.terms().size(), 2u);
  EXPECT_DOUBLE_EQ(e.evaluate({5.0, 7.0}), 5.0 + 21.0 + 4.0);
  LinExpr z = LinExpr(a) - LinExpr(a);
  z.compact();
  EXPECT_TRUE(z.is_constant());
}

TEST(AffineMatrix, TransposeAndEvaluate) {
  SDPProblem p;
  const Var x = p.add_variable("x");
  MatrixXd c(2, 3);
  c << 1, 2, 3, 4, 5, 6;
  const AffineMatrix m = AffineMatrix::term(x, c) + AffineMatrix::constant(MatrixXd::Ones(2, 3));
  EXPECT_TRUE(m.evaluate({2.0}).isApprox(2.0 * c + MatrixXd::Ones(2, 3)));
  EXPECT_TRUE(m.transpose().evaluate({2.0}).isApprox((2.0 * c + MatrixXd::Ones(2, 3)).transpose()));
}

TEST(L1Epigraph, SingleEntry) {
  SDPProblem p;
  const Var q = p.add_variable("q");
  const auto t = p.add_l1_epigraph({q}, {1.0});
  ASSERT_EQ(t.size(), 1u);
  ASSERT_EQ(p.linear().size(), 2u);
  EXPECT_DOUBLE_EQ(p.linear()[0].expr.evaluate({-2.0, 3.0}), 5.0);
  EXPECT_DOUBLE_EQ(p.linear()[1].expr.evaluate({-2.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(p.objective().evaluate({-2.0, 3.0}), 3.0);
}

TEST(L1Epigraph, ZeroWeightLeavesObjective) {
  SDPProblem p;
  const Var q = p.add_variable("q");
  p.add_l1_epigraph({q}, {0.0});
  EXPECT_FALSE(p.has_objective());
  EXPECT_EQ(p.linear().size(), 2u);
}

TEST(L1Epigraph, WeightedPair) {
  SDPProblem p;
  const Var q1 = p.add_variable("q1");
  const Var q2 = p.add_variable("q2");
  p.add_l1_epigraph({q1, q2}, {1.0, 2.0});
  EXPECT_DOUBLE_EQ(p.objective().evaluate({0.0, 0.0, 3.0, 5.0}), 13.0);
}

TEST(Solver, ScalarFeasibility) {
  SDPProblem p;
  const SymmetricVar P = p.add_symmetric("P", 1);
  p.add_lmi("P", P.expr(), true);
  p.add_lmi("two_P", 2.0 * P.expr() - AffineMatrix::constant(MatrixXd::Constant(1, 1, 1e-3)),
            false);
  const SDPSolution s = solve(p);
  ASSERT_TRUE(s.ok()) << s.diagnostics;
  EXPECT_GE(P.value(s.values)(0, 0), 0.5e-3 - 1e-9);
}

TEST(Solver, LinearOptimum) {
  SDPProblem p;
  const Var x = p.add_variable("x");
  p.add_linear("x_ge_3", LinExpr(x) - LinExpr(3.0), false);
  p.add_objective(LinExpr(x));
  const SDPSolution s = solve(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal) << s.diagnostics;
  EXPECT_NEAR(s.value(x), 3.0, 1e-6);
}

TEST(Solver, SemidefiniteOptimum) {
  // min t subject to [t 1; 1 1] >= 0 has optimum t = 1.
  SDPProblem p;
  const Var t = p.add_variable("t");
  AffineMatrix m(2, 2);
  m(0, 0) = LinExpr(t);
  m(0, 1) = LinExpr(1.0);
  m(1, 0) = LinExpr(1.0);
  m(1, 1) = LinExpr(1.0);
  p.add_lmi("m", m, false);
  p.add_objective(LinExpr(t));
  const SDPSolution s = solve(p);
  ASSERT_TRUE(s.ok()) << s.diagnostics;
  EXPECT_NEAR(s.value(t), 1.0, 1e-6);
}

TEST(Solver, DetectsInfeasibility) {
  SDPProblem p;
  const SymmetricVar P = p.add_symmetric("P", 1);
  p.add_lmi("P", P.expr(), true);
  p.add_lmi("neg_P", -1.0 * P.expr(), false);
  const SDPSolution s = solve(p);
  EXPECT_EQ(s.status, SolveStatus::Infeasible) << s.diagnostics;
}

TEST(Residuals, EquilibriumExample) {
  // Passivity dissipation matrix of (A, B, C, D) = (-1, 1, 1, 0) at P = p.
  SDPProblem p;
  const Var P = p.add_variable("P");
  AffineMatrix m(2, 2);
  m(0, 0) = LinExpr::term(P, 2.0);
  m(0, 1) = LinExpr::term(P, -1.0) + LinExpr(0.5);
  m(1, 0) = m(0, 1);
  m(1, 1) = LinExpr(0.0);
  p.add_lmi("dissipation", m);
  EXPECT_NEAR(residual_check(p, {0.5}).worst, 0.0, 1e-12);
  EXPECT_LT(residual_check(p, {0.4}).worst, 0.0);
  EXPECT_TRUE(residual_check(SDPProblem{}, {}).empty());
}

TEST(Problem, UndeclaredVariableRejected) {
  SDPProblem p;
  EXPECT_THROW(p.add_linear("bad", LinExpr(Var{3})), mgc::Error);
}

TEST(Problem, JsonDumpParses) {
  SDPProblem p;
  const SymmetricVar P = p.add_symmetric("P", 2);
  p.add_lmi("P", P.expr());
  const auto j = nlohmann::json::parse(p.to_json());
  EXPECT_TRUE(j.is_object());
}

TEST(SchurKernel, ParallelMatchesSerial) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 12, m = 20;
  DenseBlock blk;
  blk.n = n;
  blk.F0 = MatrixXd::Zero(n, n);
  blk.F.resize(m);
  for (int k = 0; k < m; ++k)
    for (int e = 0; e < 6; ++e) blk.F[k].push(int(rng() % n), int(rng() % n), u(rng));
  MatrixXd G = MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
  const MatrixXd X = G * G.transpose() + MatrixXd::Identity(n, n);
  G = MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
  const MatrixXd Z = G * G.transpose() + MatrixXd::Identity(n, n);
  const MatrixXd Zinv = Z.inverse();
  MatrixXd Ms = MatrixXd::Zero(m, m), Mp = MatrixXd::Zero(m, m);
  schur_block_serial(blk, X, Zinv, Ms);
  schur_block_parallel(blk, X, Zinv, Mp);
  EXPECT_LE((Ms - Mp).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, Ms.cwiseAbs().maxCoeff()));
  // tr(F_i X F_j Zinv) against the dense definition.
  const MatrixXd F2 = blk.F[2].dense(n), F5 = blk.F[5].dense(n);
  EXPECT_NEAR(Ms(2, 5), (F2 * X * F5 * Zinv).trace(), 1e-10);
}
