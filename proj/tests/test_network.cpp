// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "mgc/errors.hpp"
#include "mgc/network.hpp"
#include "mgc/synthesis.hpp"

using namespace mgc;
using Eigen::MatrixXd;

TEST(Interconnection, ZeroGainTwoDg) {
  const ValidatedModel m = validate(mgc::testing::two_dg());
  const CouplingBlocks c = coupling_blocks(m);
  const InterconnectionM M = assemble_m(MatrixXd::Zero(6, 6), c);
  EXPECT_EQ(M.uy.norm(), 0.0);
  EXPECT_TRUE(M.uby.isApprox(c.Cmat_full()));
  EXPECT_TRUE(M.uyb.isApprox(c.Cbar_full()));
  EXPECT_TRUE(M.uw.isApprox(MatrixXd::Identity(6, 6)));
  EXPECT_TRUE(M.zy.isApprox(c.D_full()));
}

TEST(Interconnection, ForbiddenEntryRejected) {
  MatrixXd K = MatrixXd::Zero(6, 6);
  K(0, 3) = 1.0;
  try {
    check_gain_structure(K);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StructureViolation);
  }
}

TEST(Interconnection, MiddleRowAccepted) {
  const ValidatedModel m = validate(mgc::testing::two_dg());
  MatrixXd K = MatrixXd::Zero(6, 6);
  const double Lt = m.spec.dgs[0].params.L_t;
  K.block(1, 3, 1, 3) << 0.3 / Lt, -0.2 / Lt, 0.1 / Lt;
  EXPECT_NO_THROW(check_gain_structure(K));
  const InterconnectionM M = assemble_m(K, coupling_blocks(m));
  EXPECT_TRUE(M.uy.isApprox(K));
}

TEST(Analysis, PassThroughSingleSubsystem) {
  const SupplyRate X = make_ifofp(-1.0, 1.0, 1);
  InterconnectionM M;
  M.uy = MatrixXd::Zero(1, 1);
  M.uyb = MatrixXd::Zero(1, 0);
  M.uw = MatrixXd::Identity(1, 1);
  M.uby = MatrixXd::Zero(0, 1);
  M.ubyb = MatrixXd::Zero(0, 0);
  M.ubw = MatrixXd::Zero(0, 1);
  M.zy = MatrixXd::Identity(1, 1);
  M.zyb = MatrixXd::Zero(1, 0);
  M.zw = MatrixXd::Zero(1, 1);
  const NetworkAnalysis a = analyze_network(M, {X}, {}, X, std::vector<double>{1.0},
                                            std::vector<double>{});
  EXPECT_TRUE(a.feasible()) << a.diagnostics;
  EXPECT_NEAR(a.residual, 0.0, 1e-12);
}

TEST(Analysis, SynthesizedTwoDgCertifies) {
  const ValidatedModel m = validate(mgc::testing::two_dg());
  const ControllerSet c = co_design(m, SynthesisConfig{});
  const CouplingBlocks sc = scaled_coupling(m, c.scaling);
  const InterconnectionM M = assemble_m(c.Khat, sc);
  std::vector<SupplyRate> X, Xb;
  for (const auto& r : c.dgs) X.push_back(make_ifofp(r.indices.nu, r.indices.rho, 3));
  for (const auto& r : c.lines) Xb.push_back(make_ifofp(r.indices.nu, r.indices.rho, 1));
  const SupplyRate Y = make_l2gain(std::sqrt(c.gamma_tilde), 6);
  const NetworkAnalysis a = analyze_network(M, X, Xb, Y, c.budget.p, c.budget.p_bar, 1e-6);
  EXPECT_TRUE(a.feasible()) << a.diagnostics << " residual " << a.residual;
  EXPECT_GE(a.residual, -1e-6);
}

TEST(Analysis, DestabilizingGainFails) {
  const ValidatedModel m = validate(mgc::testing::two_dg());
  ControllerSet c = co_design(m, SynthesisConfig{});
  for (auto& r : c.dgs) r.K_io(0) = -r.K_io(0) + 50.0;
  Eigen::EigenSolver<MatrixXd> es(closed_loop_matrix(m, c));
  EXPECT_GT(es.eigenvalues().real().maxCoeff(), 0.0);
  // The flipped local gains no longer meet their certified indices.
  const DGStateSpace ss = dg_matrices(m.spec.dgs[0].params, m.spec.dgs[0].load);
  const Eigen::Matrix3d Ti = c.scaling.T[0].inverse();
  const MatrixXd Acl = Ti * (ss.A + ss.B * c.dgs[0].K_io) * c.scaling.T[0];
  const XeidResult x = check_xeid(Acl, MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3),
                                  MatrixXd::Zero(3, 3),
                                  make_ifofp(c.dgs[0].indices.nu, c.dgs[0].indices.rho, 3));
  EXPECT_FALSE(x.feasible());
}

TEST(Topology, IndefiniteX11Rejected) {
  TopologySpec s;
  s.X = {make_ifofp(1.0, 1.0, 1)};
  s.Y = make_l2gain(1.0, 1);
  try {
    check_topology_assumptions(s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AssumptionViolated);
  }
}

TEST(Topology, BlockDiagonal) {
  const MatrixXd d = block_diagonal({MatrixXd::Constant(1, 1, 2.0), MatrixXd::Identity(2, 2)});
  EXPECT_EQ(d.rows(), 3);
  EXPECT_EQ(d(0, 0), 2.0);
  EXPECT_EQ(d(0, 1), 0.0);
  EXPECT_EQ(d(2, 2), 1.0);
}
