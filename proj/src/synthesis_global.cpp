// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgc/errors.hpp"
#include "mgc/synthesis.hpp"

namespace mgc {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using lmi::AffineMatrix;
using lmi::LinExpr;

MatrixXd gain_pattern(int num_dgs) {
  MatrixXd m = MatrixXd::Zero(3 * num_dgs, 3 * num_dgs);
  for (int i = 0; i < num_dgs; ++i)
    for (int j = 0; j < num_dgs; ++j)
      for (int k = 0; k < 3; ++k)
        if (!(i == j && k == 1)) m(3 * i + 1, 3 * j + k) = 1.0;
  return m;
}

namespace {

struct Offsets {
  int u, ub, z, x, xb, w, size;
  Offsets(int N, int L)
      : u(0), ub(3 * N), z(3 * N + L), x(6 * N + L), xb(9 * N + L), w(9 * N + 2 * L),
        size(12 * N + 2 * L) {}
};

void check_data(const GlobalData& d, int qrows, int qcols, std::size_t np, std::size_t npb) {
  const int N = d.num_dgs();
  const int L = d.num_lines();
  if (d.Cbar.rows() != 3 * N || d.Cbar.cols() != L || d.C.rows() != L || d.C.cols() != 3 * N ||
      d.D.rows() != 3 * N || d.D.cols() != 3 * N || qrows != 3 * N || qcols != 3 * N ||
      np != std::size_t(N) || npb != std::size_t(L))
    throw Error(ErrorKind::DimensionMismatch, "global LMI data sizes are inconsistent");
}

}  // namespace

MatrixXd global_matrix(const GlobalData& d, const MatrixXd& Q, const std::vector<double>& p,
                       const std::vector<double>& p_bar, const VectorXd& Gamma) {
  check_data(d, int(Q.rows()), int(Q.cols()), p.size(), p_bar.size());
  const int N = d.num_dgs();
  const int L = d.num_lines();
  if (Gamma.size() != 3 * N) throw Error(ErrorKind::DimensionMismatch, "Gamma must have 3N entries");
  const Offsets o(N, L);
  MatrixXd G = MatrixXd::Zero(o.size, o.size);
  auto put = [&G](int r, int c, double v) {
    G(r, c) += v;
    if (r != c) G(c, r) += v;
  };
  for (int i = 0; i < N; ++i) {
    const double a = -p[i] * d.dg[i].nu;  // p_i X_i11
    for (int k = 0; k < 3; ++k) {
      const int r = 3 * i + k;
      put(o.u + r, o.u + r, a);
      put(o.z + r, o.z + r, 1.0);
      put(o.x + r, o.x + r, p[i] * d.dg[i].rho);
      put(o.w + r, o.w + r, Gamma(r));
      put(o.u + r, o.w + r, a * d.w_gain);
      put(o.x + r, o.w + r, -0.5 * p[i] * d.w_gain);
      for (int l = 0; l < L; ++l) put(o.u + r, o.xb + l, a * d.Cbar(r, l));
    }
  }
  for (int l = 0; l < L; ++l) {
    const double ab = -p_bar[l] * d.line[l].nu;
    put(o.ub + l, o.ub + l, ab);
    put(o.xb + l, o.xb + l, p_bar[l] * d.line[l].rho);
    for (int c = 0; c < 3 * N; ++c) put(o.ub + l, o.x + c, ab * d.C(l, c));
  }
  // Q is p X11 M_ux; its image through X21 X11^{-1} is Q scaled by -1/(2 nu_i) per row block.
  for (int r = 0; r < 3 * N; ++r) {
    const double s = -1.0 / (2.0 * d.dg[r / 3].nu);
    for (int c = 0; c < 3 * N; ++c) {
      G(o.u + r, o.x + c) += Q(r, c);
      G(o.x + c, o.u + r) += Q(r, c);
      G(o.x + r, o.x + c) -= s * Q(r, c);
      G(o.x + c, o.x + r) -= s * Q(r, c);
    }
  }
  for (int r = 0; r < 3 * N; ++r)
    for (int c = 0; c < 3 * N; ++c) put(o.z + r, o.x + c, d.D(r, c));
  for (int r = 0; r < 3 * N; ++r)
    for (int l = 0; l < L; ++l)
      put(o.x + r, o.xb + l, -0.5 * p[r / 3] * d.Cbar(r, l) - 0.5 * p_bar[l] * d.C(l, r));
  return G;
}

AffineMatrix global_lmi(const GlobalData& d, const AffineMatrix& Q, const std::vector<lmi::Var>& p,
                        const std::vector<lmi::Var>& p_bar, lmi::Var gamma) {
  check_data(d, Q.rows(), Q.cols(), p.size(), p_bar.size());
  const int N = d.num_dgs();
  const int L = d.num_lines();
  const Offsets o(N, L);
  const MatrixXd I3 = MatrixXd::Identity(3, 3);

  AffineMatrix X11p(3 * N, 3 * N), X22p(3 * N, 3 * N), Hp(3 * N, 3 * N);
  for (int i = 0; i < N; ++i) {
    X11p.set_block(3 * i, 3 * i, AffineMatrix::term(p[i], -d.dg[i].nu * I3));
    X22p.set_block(3 * i, 3 * i, AffineMatrix::term(p[i], d.dg[i].rho * I3));
    Hp.set_block(3 * i, 3 * i, AffineMatrix::term(p[i], 0.5 * I3));
  }
  MatrixXd X21inv = MatrixXd::Zero(3 * N, 3 * N);
  for (int i = 0; i < N; ++i) X21inv.block(3 * i, 3 * i, 3, 3) = (-0.5 / d.dg[i].nu) * I3;
  AffineMatrix Xb11p(L, L), Xb22p(L, L), Hbp(L, L);
  for (int l = 0; l < L; ++l) {
    Xb11p(l, l) = LinExpr::term(p_bar[l], -d.line[l].nu);
    Xb22p(l, l) = LinExpr::term(p_bar[l], d.line[l].rho);
    Hbp(l, l) = LinExpr::term(p_bar[l], 0.5);
  }

  AffineMatrix G(o.size, o.size);
  auto sym = [&G](int r, int c, const AffineMatrix& m) {
    G.add_block(r, c, m);
    if (r != c) G.add_block(c, r, m.transpose());
  };
  const AffineMatrix xx = X22p - 1.0 * (X21inv * Q) - Q.transpose() * MatrixXd(X21inv.transpose());
  sym(o.u, o.u, X11p);
  sym(o.ub, o.ub, Xb11p);
  sym(o.z, o.z, AffineMatrix::constant(MatrixXd::Identity(3 * N, 3 * N)));
  sym(o.x, o.x, xx);
  sym(o.xb, o.xb, Xb22p);
  sym(o.w, o.w, AffineMatrix::term(gamma, MatrixXd::Identity(3 * N, 3 * N)));
  sym(o.u, o.x, Q);
  if (L > 0) {
    sym(o.u, o.xb, X11p * d.Cbar);
    sym(o.ub, o.x, Xb11p * d.C);
    sym(o.x, o.xb, -1.0 * (Hp * d.Cbar) - MatrixXd(d.C.transpose()) * Hbp);
  }
  sym(o.u, o.w, d.w_gain * X11p);
  sym(o.z, o.x, AffineMatrix::constant(d.D));
  sym(o.x, o.w, -d.w_gain * Hp);
  return G;
}

TopologySpec global_topology_spec(const GlobalData& d, double gamma_bar) {
  const int N = d.num_dgs();
  const int L = d.num_lines();
  TopologySpec s;
  for (const auto& g : d.dg) s.X.push_back(make_ifofp(g.nu, g.rho, 3));
  for (const auto& l : d.line) s.Xbar.push_back(make_ifofp(l.nu, l.rho, 1));
  SupplyRate Y;
  Y.kind = SupplyKind::L2Gain;
  Y.X11 = 0.5 * gamma_bar * MatrixXd::Identity(3 * N, 3 * N);
  Y.X12 = MatrixXd::Zero(3 * N, 3 * N);
  Y.X21 = MatrixXd::Zero(3 * N, 3 * N);
  Y.X22 = -MatrixXd::Identity(3 * N, 3 * N);
  s.Y = Y;
  s.uy = BlockSpec::free_block(gain_pattern(N));
  s.uyb = BlockSpec::fixed_block(d.Cbar);
  s.uw = BlockSpec::fixed_block(d.w_gain * MatrixXd::Identity(3 * N, 3 * N));
  s.uby = BlockSpec::fixed_block(d.C);
  s.ubyb = BlockSpec::fixed_block(MatrixXd::Zero(L, L));
  s.ubw = BlockSpec::fixed_block(MatrixXd::Zero(L, 3 * N));
  s.zy = d.D;
  s.zyb = MatrixXd::Zero(3 * N, L);
  s.zw = MatrixXd::Zero(3 * N, 3 * N);
  s.gamma_variable = true;
  s.gamma_bar = gamma_bar;
  return s;
}

GlobalResult synth_global(const GlobalData& d, const SynthesisConfig& config,
                          const lmi::SolverOptions& options) {
  const int N = d.num_dgs();
  const int L = d.num_lines();
  for (const auto& g : d.dg)
    if (!(g.nu < 0.0))
      throw Error(ErrorKind::AssumptionViolated, "DG nu must be negative so that X11 > 0");
  for (const auto& l : d.line)
    if (!(l.nu < 0.0))
      throw Error(ErrorKind::AssumptionViolated, "line nu must be negative so that X11 > 0");

  const std::vector<double> p0 = config.p.value_or(std::vector<double>(N, 1.0));
  const std::vector<double> pb0 = config.p_bar.value_or(std::vector<double>(L, 1.0));
  lmi::SDPProblem prob;
  std::vector<lmi::Var> p, pb;
  for (int i = 0; i < N; ++i) p.push_back(prob.add_variable("p" + std::to_string(i), p0.at(i)));
  for (int l = 0; l < L; ++l)
    pb.push_back(prob.add_variable("p_bar" + std::to_string(l), pb0.at(l)));
  const lmi::Var gamma = prob.add_variable("gamma", 0.5 * config.gamma_bar);

  const MatrixXd pattern = gain_pattern(N);
  AffineMatrix Q(3 * N, 3 * N);
  std::vector<lmi::Var> entries;
  std::vector<double> weights;
  for (int r = 0; r < 3 * N; ++r)
    for (int c = 0; c < 3 * N; ++c) {
      if (pattern(r, c) == 0.0) continue;
      const int i = r / 3, j = c / 3;
      const lmi::Var v = prob.add_variable(
          "Q" + std::to_string(r) + "_" + std::to_string(c), p0[i] * std::abs(d.dg[i].nu));
      Q(r, c) = LinExpr(v);
      entries.push_back(v);
      weights.push_back(i == j ? 0.0 : config.c_offdiag);
    }
  if (config.c_offdiag > 0.0) prob.add_l1_epigraph(entries, weights, "l1_q");
  for (int i = 0; i < N; ++i) prob.add_linear("p" + std::to_string(i), LinExpr(p[i]));
  for (int l = 0; l < L; ++l) prob.add_linear("p_bar" + std::to_string(l), LinExpr(pb[l]));
  prob.add_linear("gamma_pos", LinExpr(gamma));
  prob.add_linear("gamma_bar", LinExpr(config.gamma_bar) - LinExpr(gamma));
  prob.add_objective(config.c0 * LinExpr(gamma));
  prob.add_lmi("global", global_lmi(d, Q, p, pb, gamma), true);

  const lmi::SDPSolution sol = lmi::solve(prob, options);
  GlobalResult out;
  out.status = sol.status;
  out.diagnostics = sol.diagnostics;
  if (!sol.ok()) return out;

  for (const auto& v : p) out.p.push_back(sol.value(v));
  for (const auto& v : pb) out.p_bar.push_back(sol.value(v));
  out.gamma_tilde = sol.value(gamma);
  out.Q = Q.evaluate(sol.values);
  out.Khat = MatrixXd::Zero(3 * N, 3 * N);
  for (int r = 0; r < 3 * N; ++r) {
    const double x11p = -out.p[r / 3] * d.dg[r / 3].nu;
    for (int c = 0; c < 3 * N; ++c)
      if (pattern(r, c) != 0.0) out.Khat(r, c) = out.Q(r, c) / (x11p * d.w_gain);
  }

  // Pruned blocks are zeroed and the certificate is re-evaluated at the pruned gains.
  const std::vector<Edge> edges = extract_topology(out.Khat, config.prune_threshold);
  MatrixXd kept = MatrixXd::Zero(3 * N, 3 * N);
  for (int i = 0; i < N; ++i) kept.block(3 * i, 3 * i, 3, 3) = out.Khat.block(3 * i, 3 * i, 3, 3);
  for (const auto& e : edges)
    kept.block(3 * e.to, 3 * e.from, 3, 3) = out.Khat.block(3 * e.to, 3 * e.from, 3, 3);
  out.Khat = kept;
  MatrixXd Qk = kept;
  for (int r = 0; r < 3 * N; ++r) Qk.row(r) *= -out.p[r / 3] * d.dg[r / 3].nu * d.w_gain;
  out.objective = config.c0 * out.gamma_tilde;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) out.objective += config.c_offdiag * Qk.block(3 * i, 3 * j, 3, 3).cwiseAbs().sum();
  out.residual = lmi::min_eigenvalue(global_matrix(
      d, Qk, out.p, out.p_bar, VectorXd::Constant(3 * N, out.gamma_tilde)));
  std::ostringstream os;
  os << sol.diagnostics << "; edges=" << edges.size() << " residual=" << out.residual;
  out.diagnostics = os.str();
  return out;
}

std::vector<Edge> extract_topology(const MatrixXd& Khat, double threshold) {
  const int N = static_cast<int>(Khat.rows() / 3);
  MatrixXd norms = MatrixXd::Zero(N, N);
  double max_norm = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      norms(i, j) = Khat.block(3 * i, 3 * j, 3, 3).cwiseAbs().sum();
      max_norm = std::max(max_norm, norms(i, j));
    }
  std::vector<Edge> edges;
  constexpr double kAbsoluteFloor = 1e-8;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j && norms(i, j) > threshold * max_norm && norms(i, j) > kAbsoluteFloor)
        edges.push_back({i, j, norms(i, j)});
  return edges;
}

}  // namespace mgc
