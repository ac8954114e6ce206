// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "instances.hpp"
#include "mgc/errors.hpp"
#include "mgc/model.hpp"

using namespace mgc;
using mgc::testing::make_dg;

TEST(Model, TwoDgIncidence) {
  const ValidatedModel m = validate(mgc::testing::two_dg());
  ASSERT_EQ(m.B.rows(), 2);
  ASSERT_EQ(m.B.cols(), 1);
  EXPECT_EQ(m.B(0, 0), 1.0);
  EXPECT_EQ(m.B(1, 0), -1.0);
}

TEST(Model, ChainIncidence) {
  const IncidenceMatrix B = incidence_matrix({{1, 1, 0, 1}, {1, 1, 1, 2}}, 3);
  Eigen::MatrixXd expected(3, 2);
  expected << 1, 0, -1, 1, 0, -1;
  EXPECT_TRUE(B.isApprox(expected));
}

TEST(Model, EmptyIncidence) {
  const IncidenceMatrix B = incidence_matrix({}, 1);
  EXPECT_EQ(B.rows(), 1);
  EXPECT_EQ(B.cols(), 0);
}

TEST(Model, RingColumnsSumToZero) {
  const IncidenceMatrix B = incidence_matrix({{1, 1, 0, 1}, {1, 1, 1, 2}, {1, 1, 2, 0}}, 3);
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(B.col(l).sum(), 0.0);
    EXPECT_EQ(B.col(l).cwiseAbs().sum(), 2.0);
  }
}

TEST(Model, DuplicateEndpointsRejected) {
  MicrogridSpec s = mgc::testing::two_dg();
  s.lines[0].to_dg = 0;
  try {
    validate(s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DuplicateLineEndpoints);
  }
}

TEST(Model, ViolationsNameFields) {
  MicrogridSpec s = mgc::testing::two_dg();
  s.dgs[1].params.C_t = -1.0;
  const auto v = find_violations(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "dgs[1].C_t");
  EXPECT_EQ(v[0].kind, "NonPositiveParameter");
}

TEST(Model, DisconnectedGraphRejected) {
  MicrogridSpec s = mgc::testing::three_chain();
  s.lines.pop_back();
  try {
    validate(s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DisconnectedGraph);
  }
}

TEST(Model, DgMatricesMatchHandComputation) {
  const DGUnit d = make_dg(0.2, 1.8e-3, 2.2e-3, 0.5);
  const DGStateSpace s = dg_matrices(d.params, d.load);
  EXPECT_NEAR(s.A(0, 0), -227.2727, 1e-3);
  EXPECT_NEAR(s.A(0, 1), 454.5454, 1e-3);
  EXPECT_NEAR(s.A(1, 0), -555.5556, 1e-3);
  EXPECT_NEAR(s.A(1, 1), -111.1111, 1e-3);
  EXPECT_EQ(s.A(2, 0), -1.0);
  EXPECT_EQ(s.A(0, 2), 0.0);
  EXPECT_NEAR(s.B(1), 555.5556, 1e-3);
  EXPECT_EQ(s.B(0), 0.0);
  EXPECT_EQ(s.B(2), 0.0);
}

TEST(Model, ZeroConductanceOnlyChangesCorner) {
  DGUnit d = make_dg(0.2, 1.8e-3, 2.2e-3, 0.5);
  const DGStateSpace a = dg_matrices(d.params, d.load);
  d.load.Y_L = 0.0;
  const DGStateSpace b = dg_matrices(d.params, d.load);
  EXPECT_EQ(b.A(0, 0), 0.0);
  Eigen::Matrix3d diff = a.A - b.A;
  diff(0, 0) = 0.0;
  EXPECT_EQ(diff.norm(), 0.0);
}

TEST(Model, DoublingCapacitanceHalvesFirstRow) {
  DGUnit d = make_dg(0.2, 1.8e-3, 2.2e-3, 0.5);
  const DGStateSpace a = dg_matrices(d.params, d.load);
  d.params.C_t *= 2.0;
  const DGStateSpace b = dg_matrices(d.params, d.load);
  EXPECT_TRUE(b.A.row(0).isApprox(0.5 * a.A.row(0)));
  EXPECT_TRUE(b.A.bottomRows(2).isApprox(a.A.bottomRows(2)));
}

TEST(Model, LineMatrices) {
  EXPECT_NEAR(line_matrices({0.05, 2.1e-6, 0, 1}).A, -23809.5238, 1e-3);
  EXPECT_EQ(line_matrices({0.3, 0.3, 0, 1}).A, -1.0);
  EXPECT_DOUBLE_EQ(line_matrices({0.05, 1e-4, 0, 1}).A, 2.0 * line_matrices({0.05, 2e-4, 0, 1}).A);
}

TEST(Model, ZipCurrent) {
  EXPECT_NEAR(zip_current({2.0, 0.5, 100.0}, 48.0), 2.0 + 24.0 + 100.0 / 48.0, 1e-12);
  EXPECT_EQ(zip_current({0.0, 0.0, 0.0}, 17.0), 0.0);
  EXPECT_EQ(zip_current({0.0, 1.0, 0.0}, 5.0), 5.0);
}

TEST(Model, CouplingBlocks) {
  MicrogridSpec s = mgc::testing::two_dg();
  s.lines[0].L = 2.1e-6;
  const CouplingBlocks c = coupling_blocks(validate(s));
  EXPECT_NEAR(c.Cbar[0][0](0), -454.5454, 1e-3);
  EXPECT_NEAR(c.Cbar[1][0](0), 454.5454, 1e-3);
  EXPECT_EQ(c.Cbar[0][0].tail<2>().norm(), 0.0);
  EXPECT_NEAR(c.Cmat[0][0](0), 476190.476, 1e-2);
  EXPECT_NEAR(c.Cmat[0][1](0), -476190.476, 1e-2);
  EXPECT_EQ(c.D.diagonal(), Eigen::Vector3d(0, 0, 1));
}

TEST(Model, IsolatedDgHasZeroCoupling) {
  const CouplingBlocks c = coupling_blocks(validate(mgc::testing::single_dg()));
  EXPECT_EQ(c.Cbar_full().size(), 0);
  EXPECT_EQ(c.D_full().rows(), 3);
}
