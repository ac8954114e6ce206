// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "instances.hpp"
#include "mgc/errors.hpp"
#include "mgc/synthesis.hpp"

using namespace mgc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double max_real_eig(const MatrixXd& A) {
  return Eigen::EigenSolver<MatrixXd>(A).eigenvalues().real().maxCoeff();
}

ValidatedModel two() { return validate(mgc::testing::two_dg()); }
ValidatedModel four() { return validate(mgc::testing::four_dg()); }

}  // namespace

TEST(Budget, DefaultDgIndices) {
  const IndexFeasibility f = index_feasibility(two(), SynthesisConfig{});
  for (const auto& g : f.budget.dg) {
    EXPECT_DOUBLE_EQ(g.gamma_i, 5.0);
    EXPECT_DOUBLE_EQ(g.nu, -0.1);
    EXPECT_DOUBLE_EQ(g.rho_tilde, 0.5);
    EXPECT_DOUBLE_EQ(g.rho, 2.0);
    // -gamma_i / p < nu < 0 and rho_tilde < min(p, 4 gamma_i / p).
    EXPECT_LT(-g.gamma_i, g.nu);
    EXPECT_LT(g.rho_tilde, std::min(1.0, 4.0 * g.gamma_i));
  }
}

TEST(Budget, TinyGainBoundIsInfeasible) {
  SynthesisConfig cfg;
  cfg.gamma_bar = 1e-6;
  try {
    index_feasibility(two(), cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
    EXPECT_EQ(e.stage(), "index_feasibility");
  }
  try {
    co_design(two(), cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.stage(), "index_feasibility");
  }
}

TEST(Budget, LineRhoBoundFromDgNu) {
  DGIndices g;
  g.nu = -0.1;
  g.rho_tilde = 0.0;
  const double cbar = -1.0 / 2.2e-3;
  const LineRequirement r = line_requirement(g, 1.0, 1.0, cbar, 1e4, ConditionMode::Rederived);
  EXPECT_NEAR(r.rho_min, 20661.157, 1e-2);
  const LineRequirement half = line_requirement(g, 1.0, 2.0, cbar, 1e4, ConditionMode::Rederived);
  EXPECT_NEAR(half.rho_min, 0.5 * r.rho_min, 1e-9 * r.rho_min);
  const LineRequirement lit = line_requirement(g, 1.0, 1.0, cbar, 1e4, ConditionMode::Literal);
  EXPECT_NEAR(lit.rho_min, 0.0, 1e-12);
}

TEST(Budget, MinorsPositiveOnReferenceInstances) {
  for (const ValidatedModel& m : {two(), four()}) {
    const SynthesisConfig cfg;
    const IndexFeasibility f = index_feasibility(m, cfg);
    const SubsystemScaling s = make_scaling(m, cfg);
    const auto minors = necessary_minors(f.budget, scaled_coupling(m, s), s.omega);
    ASSERT_FALSE(minors.empty());
    for (const auto& c : minors)
      EXPECT_GT(c.min_eigenvalue, 0.0) << c.condition << " dg " << c.dg << " line " << c.line;
  }
}

TEST(Budget, DiscrepanciesOnlyForLineConditions) {
  for (const ValidatedModel& m : {two(), four()}) {
    const IndexFeasibility f = index_feasibility(m, SynthesisConfig{});
    ASSERT_FALSE(f.discrepancies.empty());
    for (const auto& d : f.discrepancies)
      EXPECT_TRUE(d.condition == "line_rho_vs_dg_nu" || d.condition == "line_nu_vs_dg_rho")
          << d.condition;
  }
}

TEST(DgLocal, RoundTripHurwitzAndCeiling) {
  const ValidatedModel m = two();
  const SynthesisConfig cfg;
  const SubsystemScaling s = make_scaling(m, cfg);
  const DGLocalResult r = synth_dg_local(m.spec.dgs[0], s.T[0], s.omega, 1.0, cfg);
  const DGStateSpace ss = dg_matrices(m.spec.dgs[0].params, m.spec.dgs[0].load);
  const MatrixXd Acl = ss.A + ss.B * r.K_io;
  EXPECT_LT(max_real_eig(Acl), 0.0);
  const Eigen::Matrix3d Ti = s.T[0].inverse();
  const XeidResult x = check_xeid(Ti * Acl * s.T[0], MatrixXd::Identity(3, 3),
                                  MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 3),
                                  make_ifofp(r.indices.nu, r.indices.rho, 3));
  EXPECT_TRUE(x.feasible()) << x.diagnostics;
  EXPECT_LT(r.indices.rho_tilde, 1.0);
  EXPECT_LT(r.indices.nu, 0.0);
  EXPECT_GT(r.indices.gamma_i + r.indices.nu, 0.0);
}

TEST(LineLocal, OpenLoopAcceptedWhenSufficient) {
  const LineParams line{0.05, 1e-4, 0, 1};
  const LineLocalResult r = synth_line_local(line, 1.0, 1.0, 1.0, {}, 0.0, SynthesisConfig{});
  EXPECT_TRUE(r.open_loop);
  EXPECT_EQ(r.K_lo, 0.0);
}

TEST(LineLocal, RoundTrip) {
  const ValidatedModel m = two();
  const ControllerSet c = co_design(m, SynthesisConfig{});
  const auto& r = c.lines[0];
  const LineStateSpace ss = line_matrices(m.spec.lines[0]);
  const MatrixXd I = MatrixXd::Identity(1, 1);
  const XeidResult x = check_xeid(MatrixXd::Constant(1, 1, ss.A + ss.B * r.K_lo), I, I,
                                  MatrixXd::Zero(1, 1),
                                  make_ifofp(r.indices.nu, r.indices.rho, 1));
  EXPECT_TRUE(x.feasible()) << x.diagnostics;
  // The coupling requirement from both endpoints is met.
  for (int i = 0; i < 2; ++i) {
    const CouplingBlocks sc = scaled_coupling(m, c.scaling);
    const LineRequirement q = line_requirement(c.dgs[i].indices, c.budget.p[i], c.budget.p_bar[0],
                                               sc.Cbar[i][0](0), sc.Cmat[0][i](0),
                                               ConditionMode::Rederived);
    EXPECT_GT(r.indices.rho, q.rho_min);
  }
}

TEST(Global, ThreeAssembliesAgree) {
  const ValidatedModel m = two();
  const ControllerSet c = co_design(m, SynthesisConfig{});
  const GlobalData d = global_data(m, c);
  const int N = d.num_dgs(), L = d.num_lines();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MatrixXd pattern = gain_pattern(N);
  MatrixXd Qv = MatrixXd::Zero(3 * N, 3 * N);
  for (int r = 0; r < 3 * N; ++r)
    for (int k = 0; k < 3 * N; ++k)
      if (pattern(r, k) != 0.0) Qv(r, k) = u(rng);
  const std::vector<double> p{0.7, 1.3}, pb{2.1};
  const double gamma = 0.4;
  const MatrixXd direct = global_matrix(d, Qv, p, pb, VectorXd::Constant(3 * N, gamma));

  lmi::SDPProblem prob;
  std::vector<lmi::Var> pv, pbv;
  std::vector<double> x;
  for (double v : p) { pv.push_back(prob.add_variable("p")); x.push_back(v); }
  for (double v : pb) { pbv.push_back(prob.add_variable("pb")); x.push_back(v); }
  const lmi::Var g = prob.add_variable("gamma");
  x.push_back(gamma);
  lmi::AffineMatrix Q(3 * N, 3 * N);
  for (int r = 0; r < 3 * N; ++r)
    for (int k = 0; k < 3 * N; ++k)
      if (pattern(r, k) != 0.0) {
        Q(r, k) = lmi::LinExpr(prob.add_variable("q"));
        x.push_back(Qv(r, k));
      }
  const MatrixXd affine = global_lmi(d, Q, pv, pbv, g).evaluate(x);
  EXPECT_LE((affine - direct).cwiseAbs().maxCoeff(), 1e-9 * direct.cwiseAbs().maxCoeff());

  const TopologySpec spec = global_topology_spec(d, 10.0);
  lmi::SDPProblem tp;
  const TopologyVariables tv = declare_topology_variables(tp, spec);
  std::vector<double> y(tp.num_variables(), 0.0);
  for (int i = 0; i < N; ++i) y[tv.p[i].id] = p[i];
  for (int l = 0; l < L; ++l) y[tv.pbar[l].id] = pb[l];
  y[tv.gamma->id] = gamma;
  for (int r = 0; r < 3 * N; ++r)
    for (int k = 0; k < 3 * N; ++k)
      if (tv.Luy_entries[r][k]) y[tv.Luy_entries[r][k]->id] = Qv(r, k);
  const MatrixXd generic = topology_lmi(spec, tv).evaluate(y);
  ASSERT_EQ(generic.rows(), direct.rows());
  EXPECT_LE((generic - direct).cwiseAbs().maxCoeff(), 1e-9 * direct.cwiseAbs().maxCoeff());
}

TEST(Global, ExtractionInverse) {
  const ValidatedModel m = four();
  SynthesisConfig cfg;
  cfg.c_offdiag = 0.0;
  const ControllerSet c = co_design(m, cfg);
  const GlobalData d = global_data(m, c);
  const GlobalResult g = synth_global(d, cfg);
  ASSERT_TRUE(g.feasible());
  const MatrixXd pattern = gain_pattern(d.num_dgs());
  double worst = 0.0;
  for (int r = 0; r < g.Khat.rows(); ++r)
    for (int k = 0; k < g.Khat.cols(); ++k) {
      if (g.Khat(r, k) == 0.0) continue;
      EXPECT_NE(pattern(r, k), 0.0);
      const double q = -g.p[r / 3] * d.dg[r / 3].nu * d.w_gain * g.Khat(r, k);
      worst = std::max(worst, std::abs(q - g.Q(r, k)));
    }
  EXPECT_LE(worst, 1e-9 * std::max(1.0, g.Q.cwiseAbs().maxCoeff()));
}

MatrixXd q_from_gain(const ControllerSet& c) {
  MatrixXd Q = c.Khat;
  for (int r = 0; r < Q.rows(); ++r)
    Q.row(r) *= -c.budget.p[r / 3] * c.dgs[r / 3].indices.nu / c.scaling.omega;
  return Q;
}

TEST(Global, IndependentCertificateCheck) {
  for (const ValidatedModel& m : {two(), four()}) {
    const ControllerSet c = co_design(m, SynthesisConfig{});
    const GlobalData d = global_data(m, c);
    const MatrixXd G = global_matrix(d, q_from_gain(c), c.budget.p, c.budget.p_bar,
                                     VectorXd::Constant(3 * m.num_dgs(), c.gamma_tilde));
    const double min_eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(G).eigenvalues().minCoeff();
    EXPECT_GE(min_eig, -1e-6);
    EXPECT_NEAR(min_eig, c.global_residual, 1e-9 * std::max(1.0, G.cwiseAbs().maxCoeff()));
    EXPECT_LT(c.gamma_tilde, 10.0);
    EXPECT_LT(max_real_eig(closed_loop_matrix(m, c)), 0.0);
  }
}

TEST(Global, SparsityPenaltyTradeoff) {
  const ValidatedModel m = four();
  SynthesisConfig cfg;
  cfg.c_offdiag = 0.0;
  const ControllerSet free = co_design(m, cfg);
  cfg.c_offdiag = 1e3;
  const ControllerSet sparse = co_design(m, cfg);
  EXPECT_LE(sparse.topology.size(), free.topology.size());
  EXPECT_LE(free.gamma_tilde, sparse.gamma_tilde * (1.0 + 1e-6) + 1e-9);
}

TEST(Global, LargerGainWeightDoesNotRaiseGain) {
  const ValidatedModel m = four();
  SynthesisConfig cfg;
  const ControllerSet base = co_design(m, cfg);
  cfg.c0 = 100.0;
  const ControllerSet heavy = co_design(m, cfg);
  EXPECT_LE(heavy.gamma_tilde, base.gamma_tilde * (1.0 + 1e-6) + 1e-9);
}

TEST(Pipeline, SingleDgWithoutLines) {
  const ValidatedModel m = validate(mgc::testing::single_dg());
  const ControllerSet c = co_design(m, SynthesisConfig{});
  EXPECT_EQ(c.dgs.size(), 1u);
  EXPECT_TRUE(c.lines.empty());
  EXPECT_TRUE(c.topology.empty());
  EXPECT_LT(max_real_eig(closed_loop_matrix(m, c)), 0.0);
}

TEST(Pipeline, TwoDgProducesGains) {
  const ValidatedModel m = two();
  const ControllerSet c = co_design(m, SynthesisConfig{});
  ASSERT_EQ(c.dgs.size(), 2u);
  ASSERT_EQ(c.lines.size(), 1u);
  EXPECT_GT(c.dgs[0].K_io.norm(), 0.0);
  EXPECT_GT(c.dgs[1].K_io.norm(), 0.0);
  EXPECT_NE(c.lines[0].K_lo, 0.0);
  for (const auto& r : c.dgs) EXPECT_GT(r.certificate_residual, 0.0);
  for (const auto& r : c.lines) EXPECT_GT(r.certificate_residual, 0.0);
}

TEST(Pipeline, Deterministic) {
  const ValidatedModel m = four();
  const ControllerSet a = co_design(m, SynthesisConfig{});
  const ControllerSet b = co_design(m, SynthesisConfig{});
  EXPECT_EQ((a.K - b.K).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.gamma_tilde, b.gamma_tilde);
  for (int i = 0; i < m.num_dgs(); ++i) EXPECT_EQ(a.dgs[i].K_io, b.dgs[i].K_io);
}

TEST(Pipeline, SerialAndParallelLocalStagesAgree) {
  const ValidatedModel m = four();
  lmi::SolverOptions serial;
  serial.parallel = false;
  const ControllerSet a = co_design(m, SynthesisConfig{}, {}, serial);
  const ControllerSet b = co_design(m, SynthesisConfig{});
  for (int i = 0; i < m.num_dgs(); ++i)
    EXPECT_LE((a.dgs[i].K_io - b.dgs[i].K_io).cwiseAbs().maxCoeff(),
              1e-6 * a.dgs[i].K_io.cwiseAbs().maxCoeff());
  EXPECT_NEAR(a.gamma_tilde, b.gamma_tilde, 1e-6);
}

TEST(Topology, ExtractionThresholds) {
  MatrixXd K = MatrixXd::Zero(9, 9);
  K(1, 3) = 1.0;   // dg0 <- dg1
  K(4, 6) = 1e-3;  // dg1 <- dg2
  K(7, 0) = 1e-12; // below the absolute floor
  const auto e = extract_topology(K, 1e-2);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].to, 0);
  EXPECT_EQ(e[0].from, 1);
  EXPECT_EQ(extract_topology(K, 1e-6).size(), 2u);
}
