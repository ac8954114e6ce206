// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "instances.hpp"
#include "mgc/errors.hpp"
#include "mgc/sim.hpp"

using namespace mgc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Designed {
  ValidatedModel model;
  ControllerSet c;
};

const Designed& two() {
  static const Designed d = [] {
    Designed x{validate(mgc::testing::two_dg()), {}};
    x.c = co_design(x.model, SynthesisConfig{});
    return x;
  }();
  return d;
}

double max_abs_deviation(const SimTrace& tr, const std::string& col, double ref) {
  double m = 0.0;
  for (double v : tr.series(col))
    if (!std::isnan(v)) m = std::max(m, std::abs(v - ref));
  return m;
}

}  // namespace

TEST(Derivative, VanishesAtEquilibrium) {
  const auto& d = two();
  const VectorXd x = equilibrium(d.model, d.c, false);
  EXPECT_LT(derivative(d.model, d.c, x, false).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Derivative, MatchesClosedLoopMatrix) {
  const auto& d = two();
  const VectorXd xs = equilibrium(d.model, d.c, false);
  const MatrixXd A = closed_loop_matrix(d.model, d.c);
  VectorXd dx(xs.size());
  for (int k = 0; k < dx.size(); ++k) dx(k) = 0.01 * std::sin(1.0 + k);
  const VectorXd lhs = derivative(d.model, d.c, xs + dx, false) - derivative(d.model, d.c, xs, false);
  const VectorXd rhs = A * dx;
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}

TEST(Derivative, UncontrolledSingleDgIsOpenLoopModel) {
  const ValidatedModel m = validate(mgc::testing::single_dg());
  ControllerSet c;
  DGLocalResult r;
  r.K_io.setZero();
  c.dgs.push_back(r);
  const VectorXd x = Eigen::Vector3d(47.0, 3.0, 0.2);
  const DGStateSpace s = dg_matrices(m.spec.dgs[0].params, m.spec.dgs[0].load);
  const VectorXd expected = s.A * x + s.d;
  EXPECT_LE((derivative(m, c, x, false) - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Simulate, EquilibriumIsInvariant) {
  const auto& d = two();
  Scenario s;
  s.t_end = 0.5;
  const SimTrace tr = simulate(d.model, d.c, s);
  for (const char* col : {"dg0.V", "dg1.V"}) EXPECT_LT(max_abs_deviation(tr, col, 48.0), 1e-6);
  EXPECT_LT(metrics(tr).max_deviation, 1e-6);
  EXPECT_THROW(empirical_gain(tr), Error);
  try {
    empirical_gain(tr);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroDisturbanceEnergy);
  }
}

TEST(Simulate, LoadStepSettlesWithinCertificate) {
  const auto& d = two();
  for (const DisturbanceKind kind : {DisturbanceKind::LoadStep, DisturbanceKind::ConductanceStep,
                                     DisturbanceKind::ReferenceStep}) {
    Scenario s;
    s.t_end = 0.4;
    const double value = kind == DisturbanceKind::LoadStep ? 2.0
                         : kind == DisturbanceKind::ConductanceStep ? 0.1 : 1.0;
    s.disturbances = {{0.1, kind, 0, value}};
    const SimTrace tr = simulate(d.model, d.c, s);
    const Metrics m = metrics(tr);
    for (std::size_t i = 0; i < m.dgs.size(); ++i) {
      EXPECT_TRUE(m.settled[i]) << to_string(kind) << " " << m.dgs[i];
      EXPECT_LT(m.final_error[i], 1e-3 * 48.0);
    }
    ASSERT_TRUE(m.gamma_hat_valid);
    EXPECT_LE(m.gamma_hat, std::sqrt(d.c.gamma_tilde) * (1.0 + 1e-2)) << to_string(kind);
  }
}

TEST(Simulate, DestabilizedGainsDiverge) {
  const auto& d = two();
  ControllerSet bad = d.c;
  for (auto& r : bad.dgs) r.K_io = -r.K_io;
  for (auto& r : bad.dgs) r.K_io(0) += 5.0;
  ASSERT_GT(Eigen::EigenSolver<MatrixXd>(closed_loop_matrix(d.model, bad))
                .eigenvalues().real().maxCoeff(), 0.0);
  Scenario s;
  s.t_end = 2.0;
  s.dt = 1e-4;
  s.initial = equilibrium(d.model, d.c, false);
  try {
    simulate(d.model, bad, s);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteState);
  }
}

TEST(Simulate, StandaloneReferenceStep) {
  const ValidatedModel m = validate(mgc::testing::single_dg());
  const ControllerSet c = co_design(m, SynthesisConfig{});
  Scenario s;
  s.t_end = 0.5;
  s.disturbances = {{0.05, DisturbanceKind::ReferenceStep, 0, 2.0}};
  const Metrics mt = metrics(simulate(m, c, s));
  EXPECT_LT(mt.final_error[0], 1e-4 * 50.0);
}

TEST(Simulate, StepHalvingConvergesAtFourthOrder) {
  const ValidatedModel m = validate(mgc::testing::single_dg());
  const ControllerSet c = co_design(m, SynthesisConfig{});
  VectorXd x0 = equilibrium(m, c, false);
  x0(0) -= 1.0;
  auto final_state = [&](double dt) {
    Scenario s;
    s.t_end = 0.02;
    s.dt = dt;
    s.initial = x0;
    s.stability_substeps = false;
    const SimTrace tr = simulate(m, c, s);
    return Eigen::Vector3d(tr.series("dg0.V").back(), tr.series("dg0.It").back(),
                           tr.series("dg0.v").back());
  };
  const Eigen::Vector3d a = final_state(2e-4), b = final_state(1e-4), r = final_state(1.25e-5);
  const double ratio = (a - r).cwiseAbs().maxCoeff() / (b - r).cwiseAbs().maxCoeff();
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Simulate, ConstantPowerLoadEquilibrium) {
  MicrogridSpec spec = mgc::testing::two_dg();
  const ValidatedModel lin = validate(spec);
  const ControllerSet c = co_design(lin, SynthesisConfig{});
  spec.dgs[0].load.P_star = 20.0;
  const ValidatedModel m = validate(spec);
  const VectorXd x = equilibrium(m, c, true);
  EXPECT_LT(derivative(m, c, x, true).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(x(0), 48.0, 1e-6);
}

TEST(Pnp, AddDgReusesExistingCertificates) {
  const auto& d = two();
  AddDG a;
  a.dg = mgc::testing::make_dg(0.22, 1.7e-3, 2.3e-3, 0.5);
  a.attach_to = 1;
  a.R = 0.06;
  a.L = 1.1e-4;
  const PnpOutcome o = apply_pnp(d.model, d.c, a, SynthesisConfig{});
  EXPECT_EQ(o.model.num_dgs(), 3);
  EXPECT_EQ(o.plan.recomputed, (std::vector<std::string>{"dg 2", "line 1", "global"}));
  EXPECT_EQ(o.plan.reused, (std::vector<std::string>{"dg 0", "dg 1", "line 0"}));
  for (int i = 0; i < 2; ++i) EXPECT_EQ(o.controllers.dgs[i].K_io, d.c.dgs[i].K_io);
  EXPECT_LT(Eigen::EigenSolver<MatrixXd>(closed_loop_matrix(o.model, o.controllers))
                .eigenvalues().real().maxCoeff(), 0.0);
}

TEST(Pnp, RemoveFromTwoDgChain) {
  const auto& d = two();
  const PnpOutcome o = apply_pnp(d.model, d.c, RemoveDG{1}, SynthesisConfig{});
  EXPECT_EQ(o.model.num_dgs(), 1);
  EXPECT_EQ(o.model.num_lines(), 0);
  EXPECT_TRUE(o.controllers.topology.empty());
}

TEST(Pnp, RemovingMiddleOfChainDisconnects) {
  const ValidatedModel m = validate(mgc::testing::three_chain());
  const ControllerSet c = co_design(m, SynthesisConfig{});
  try {
    apply_pnp(m, c, RemoveDG{1}, SynthesisConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DisconnectsGraph);
  }
}

TEST(Pnp, SimulationAcrossEvents) {
  const auto& d = two();
  Scenario s;
  s.t_end = 0.4;
  AddDG a;
  a.dg = mgc::testing::make_dg(0.22, 1.7e-3, 2.3e-3, 0.5);
  a.attach_to = 1;
  a.R = 0.06;
  a.L = 1.1e-4;
  s.pnp = {{0.1, a}, {0.25, RemoveDG{2}}};
  const SimTrace tr = simulate(d.model, d.c, s);
  EXPECT_EQ(tr.events.size(), 2u);
  EXPECT_FALSE(tr.gain_valid);
  const std::vector<double> v2 = tr.series("dg2.V");
  EXPECT_TRUE(std::isnan(v2.front()));
  EXPECT_TRUE(std::isnan(v2.back()));
  const Metrics m = metrics(tr);
  for (std::size_t i = 0; i < m.dgs.size(); ++i) EXPECT_TRUE(m.settled[i]);
}

TEST(Trace, CsvRoundTrip) {
  const auto& d = two();
  Scenario s;
  s.t_end = 0.01;
  s.disturbances = {{0.002, DisturbanceKind::LoadStep, 1, 1.0}};
  const SimTrace tr = simulate(d.model, d.c, s);
  std::stringstream ss;
  write_csv(tr, ss);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  EXPECT_EQ(header.rfind("t,dg0.V,dg0.It,dg0.v,dg0.u,", 0), 0u);
  const SimTrace back = read_csv(ss);
  ASSERT_EQ(back.t.size(), tr.t.size());
  EXPECT_EQ(back.columns, tr.columns);
  EXPECT_EQ(back.final_dgs, tr.final_dgs);
  const auto a = tr.series("dg1.V"), b = back.series("dg1.V");
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-8 * std::abs(a[k]));
}

TEST(Scenario, UnsortedEventsRejected) {
  Scenario s;
  s.disturbances = {{0.2, DisturbanceKind::LoadStep, 0, 1.0}, {0.1, DisturbanceKind::LoadStep, 0, 1.0}};
  EXPECT_THROW(validate_scenario(s), Error);
  s.disturbances.clear();
  s.dt = 0.0;
  EXPECT_THROW(validate_scenario(s), Error);
}
