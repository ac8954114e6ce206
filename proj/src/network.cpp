// SPDX-License-Identifier: Apache-2.0
#include "mgc/network.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "mgc/errors.hpp"

namespace mgc {

using Eigen::MatrixXd;
using lmi::AffineMatrix;
using lmi::LinExpr;

MatrixXd InterconnectionM::full() const {
  const auto ru = uy.rows(), rub = uby.rows(), rz = zy.rows();
  const auto cy = uy.cols(), cyb = uyb.cols(), cw = uw.cols();
  MatrixXd m = MatrixXd::Zero(ru + rub + rz, cy + cyb + cw);
  m.block(0, 0, ru, cy) = uy;
  m.block(0, cy, ru, cyb) = uyb;
  m.block(0, cy + cyb, ru, cw) = uw;
  m.block(ru, 0, rub, cy) = uby;
  m.block(ru, cy, rub, cyb) = ubyb;
  m.block(ru, cy + cyb, rub, cw) = ubw;
  m.block(ru + rub, 0, rz, cy) = zy;
  m.block(ru + rub, cy, rz, cyb) = zyb;
  m.block(ru + rub, cy + cyb, rz, cw) = zw;
  return m;
}

void check_gain_structure(const MatrixXd& K) {
  if (K.rows() != K.cols() || K.rows() % 3 != 0)
    throw Error(ErrorKind::DimensionMismatch, "distributed gain must be 3N x 3N");
  for (int r = 0; r < K.rows(); ++r) {
    if (r % 3 == 1) continue;
    for (int c = 0; c < K.cols(); ++c)
      if (K(r, c) != 0.0) {
        std::ostringstream os;
        os << "gain block (" << r / 3 << "," << c / 3 << ") has nonzero entry in row " << r % 3;
        throw Error(ErrorKind::StructureViolation, os.str());
      }
  }
}

InterconnectionM assemble_m(const MatrixXd& K, const CouplingBlocks& coupling) {
  check_gain_structure(K);
  const MatrixXd Cbar = coupling.Cbar_full();
  const MatrixXd C = coupling.Cmat_full();
  const int n3 = static_cast<int>(K.rows());
  const int L = static_cast<int>(Cbar.cols());
  if (Cbar.rows() != n3 || C.cols() != n3)
    throw Error(ErrorKind::DimensionMismatch, "gain and coupling dimensions differ");
  InterconnectionM M;
  M.uy = K;
  M.uyb = Cbar;
  M.uw = MatrixXd::Identity(n3, n3);
  M.uby = C;
  M.ubyb = MatrixXd::Zero(L, L);
  M.ubw = MatrixXd::Zero(L, n3);
  M.zy = coupling.D_full();
  M.zyb = MatrixXd::Zero(n3, L);
  M.zw = MatrixXd::Zero(n3, n3);
  return M;
}

MatrixXd block_diagonal(const std::vector<MatrixXd>& blocks) {
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  MatrixXd out = MatrixXd::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

AffineMatrix scaled_block_diagonal(const std::vector<MatrixXd>& blocks,
                                   const std::vector<lmi::Var>& scales) {
  int r = 0, c = 0;
  for (const auto& b : blocks) {
    r += static_cast<int>(b.rows());
    c += static_cast<int>(b.cols());
  }
  AffineMatrix out(r, c);
  r = c = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    out.set_block(r, c, AffineMatrix::term(scales[k], blocks[k]));
    r += static_cast<int>(blocks[k].rows());
    c += static_cast<int>(blocks[k].cols());
  }
  return out;
}

namespace {

int total_dim(const std::vector<SupplyRate>& X, bool output) {
  int n = 0;
  for (const auto& x : X) n += static_cast<int>(output ? x.X22.rows() : x.X11.rows());
  return n;
}

// Rows of W selecting [u; y], [ubar; ybar] and [w; z] as functions of [y; ybar; w].
struct Selectors {
  MatrixXd u, y, ub, yb, w, z;
};

Selectors selectors(const InterconnectionM& M) {
  const auto ny = M.uy.cols(), nyb = M.uyb.cols(), nw = M.uw.cols();
  const auto n = ny + nyb + nw;
  Selectors s;
  s.u.resize(M.uy.rows(), n);
  s.u << M.uy, M.uyb, M.uw;
  s.ub.resize(M.uby.rows(), n);
  s.ub << M.uby, M.ubyb, M.ubw;
  s.z.resize(M.zy.rows(), n);
  s.z << M.zy, M.zyb, M.zw;
  s.y = MatrixXd::Zero(ny, n);
  s.y.leftCols(ny).setIdentity();
  s.yb = MatrixXd::Zero(nyb, n);
  s.yb.middleCols(ny, nyb).setIdentity();
  s.w = MatrixXd::Zero(nw, n);
  s.w.rightCols(nw).setIdentity();
  return s;
}

// Contribution of one subsystem with supply X, input rows U and output rows Yr.
MatrixXd subsystem_form(const SupplyRate& X, const MatrixXd& U, const MatrixXd& Yr) {
  return U.transpose() * X.X11 * U + U.transpose() * X.X12 * Yr + Yr.transpose() * X.X21 * U +
         Yr.transpose() * X.X22 * Yr;
}

void check_analysis_dims(const InterconnectionM& M, const std::vector<SupplyRate>& X,
                         const std::vector<SupplyRate>& Xbar, const SupplyRate& Y) {
  if (total_dim(X, false) != M.uy.rows() || total_dim(X, true) != M.uy.cols() ||
      total_dim(Xbar, false) != M.uby.rows() || total_dim(Xbar, true) != M.uyb.cols() ||
      Y.X11.rows() != M.uw.cols() || Y.X22.rows() != M.zy.rows())
    throw Error(ErrorKind::DimensionMismatch, "supply rates do not match interconnection blocks");
}

// Per-subsystem quadratic forms so that the analysis matrix is sum p_k G_k - G_Y.
std::vector<MatrixXd> subsystem_forms(const InterconnectionM& M, const std::vector<SupplyRate>& X,
                                      const std::vector<SupplyRate>& Xbar, MatrixXd& GY,
                                      const SupplyRate& Y) {
  check_analysis_dims(M, X, Xbar, Y);
  const Selectors s = selectors(M);
  std::vector<MatrixXd> G;
  int ru = 0, ry = 0;
  for (const auto& x : X) {
    const int du = x.dim(), dy = static_cast<int>(x.X22.rows());
    G.push_back(subsystem_form(x, s.u.middleRows(ru, du), s.y.middleRows(ry, dy)));
    ru += du;
    ry += dy;
  }
  ru = ry = 0;
  for (const auto& x : Xbar) {
    const int du = x.dim(), dy = static_cast<int>(x.X22.rows());
    G.push_back(subsystem_form(x, s.ub.middleRows(ru, du), s.yb.middleRows(ry, dy)));
    ru += du;
    ry += dy;
  }
  GY = subsystem_form(Y, s.w, s.z);
  return G;
}

double max_eigenvalue(const MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

MatrixXd analysis_matrix(const InterconnectionM& M, const std::vector<SupplyRate>& X,
                         const std::vector<SupplyRate>& Xbar, const SupplyRate& Y,
                         const std::vector<double>& p, const std::vector<double>& pbar) {
  if (p.size() != X.size() || pbar.size() != Xbar.size())
    throw Error(ErrorKind::DimensionMismatch, "scaling count differs from subsystem count");
  MatrixXd GY;
  const auto G = subsystem_forms(M, X, Xbar, GY, Y);
  MatrixXd out = -GY;
  for (std::size_t k = 0; k < X.size(); ++k) out += p[k] * G[k];
  for (std::size_t k = 0; k < Xbar.size(); ++k) out += pbar[k] * G[X.size() + k];
  return out;
}

NetworkAnalysis analyze_network(const InterconnectionM& M, const std::vector<SupplyRate>& X,
                                const std::vector<SupplyRate>& Xbar, const SupplyRate& Y,
                                const std::optional<std::vector<double>>& p,
                                const std::optional<std::vector<double>>& pbar, double tol,
                                const lmi::SolverOptions& options) {
  NetworkAnalysis out;
  if (p && pbar) {
    out.p = *p;
    out.pbar = *pbar;
    out.residual = -max_eigenvalue(analysis_matrix(M, X, Xbar, Y, *p, *pbar));
    out.status = out.residual >= -tol ? lmi::SolveStatus::Feasible : lmi::SolveStatus::Infeasible;
    out.diagnostics = "checked at given scalings";
    return out;
  }
  MatrixXd GY;
  const auto G = subsystem_forms(M, X, Xbar, GY, Y);
  lmi::SDPProblem prob;
  std::vector<lmi::Var> vars;
  for (std::size_t k = 0; k < X.size(); ++k) vars.push_back(prob.add_variable("p" + std::to_string(k)));
  for (std::size_t k = 0; k < Xbar.size(); ++k)
    vars.push_back(prob.add_variable("pbar" + std::to_string(k)));
  AffineMatrix neg = AffineMatrix::constant(GY);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const bool fixed = k < X.size() ? p.has_value() : pbar.has_value();
    const double given = k < X.size() ? (p ? (*p)[k] : 0.0) : (pbar ? (*pbar)[k - X.size()] : 0.0);
    const std::string tag = std::to_string(k);
    if (fixed) {
      prob.add_linear("fixed_lo" + tag, LinExpr(vars[k]) - given, false);
      prob.add_linear("fixed_hi" + tag, given - LinExpr(vars[k]), false);
    } else {
      prob.add_linear("nonneg" + tag, LinExpr(vars[k]), false);
    }
    neg -= AffineMatrix::term(vars[k], G[k]);
  }
  prob.add_lmi("network", neg, false);
  const lmi::SDPSolution sol = lmi::solve(prob, options);
  out.status = sol.status;
  out.diagnostics = sol.diagnostics;
  if (!sol.ok()) return out;
  for (std::size_t k = 0; k < X.size(); ++k) out.p.push_back(sol.value(vars[k]));
  for (std::size_t k = 0; k < Xbar.size(); ++k) out.pbar.push_back(sol.value(vars[X.size() + k]));
  out.residual = -max_eigenvalue(analysis_matrix(M, X, Xbar, Y, out.p, out.pbar));
  return out;
}

void check_topology_assumptions(const TopologySpec& spec) {
  auto min_eig = [](const MatrixXd& m) { return lmi::min_eigenvalue(m); };
  if (!(min_eig(-spec.Y.X22) > 0.0))
    throw Error(ErrorKind::AssumptionViolated, "network specification needs Y22 < 0");
  auto check = [&](const std::vector<SupplyRate>& xs, const char* cls) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double lo = min_eig(xs[k].X11);
      const double hi = -min_eig(-xs[k].X11);
      std::ostringstream os;
      os << cls << "[" << k << "]: ";
      if (lo > 0.0) continue;
      if (hi < 0.0)
        throw Error(ErrorKind::AssumptionViolated,
                    os.str() + "negative definite X11 is not supported by this synthesis path");
      throw Error(ErrorKind::AssumptionViolated, os.str() + "X11 is not sign definite");
    }
  };
  check(spec.X, "X");
  check(spec.Xbar, "Xbar");
}

namespace {

std::vector<MatrixXd> blocks_of(const std::vector<SupplyRate>& xs, int which) {
  std::vector<MatrixXd> out;
  for (const auto& x : xs) {
    switch (which) {
      case 11: out.push_back(x.X11); break;
      case 22: out.push_back(x.X22); break;
      case 12: out.push_back(x.X11.inverse() * x.X12); break;
      default: out.push_back(x.X21 * x.X11.inverse()); break;
    }
  }
  return out;
}

AffineMatrix free_matrix(lmi::SDPProblem& prob, const std::string& name, const MatrixXd& mask,
                         std::vector<std::vector<std::optional<lmi::Var>>>* entries) {
  AffineMatrix m(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()));
  if (entries) entries->assign(mask.rows(), std::vector<std::optional<lmi::Var>>(mask.cols()));
  for (int i = 0; i < mask.rows(); ++i)
    for (int j = 0; j < mask.cols(); ++j) {
      if (mask(i, j) == 0.0) continue;
      const lmi::Var v = prob.add_variable(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
      m(i, j) = LinExpr(v);
      if (entries) (*entries)[i][j] = v;
    }
  return m;
}

}  // namespace

TopologyVariables declare_topology_variables(lmi::SDPProblem& prob, const TopologySpec& spec) {
  TopologyVariables v;
  for (std::size_t k = 0; k < spec.X.size(); ++k) v.p.push_back(prob.add_variable("p" + std::to_string(k)));
  for (std::size_t k = 0; k < spec.Xbar.size(); ++k)
    v.pbar.push_back(prob.add_variable("pbar" + std::to_string(k)));
  if (spec.gamma_variable) v.gamma = prob.add_variable("gamma");
  const AffineMatrix X11p = scaled_block_diagonal(blocks_of(spec.X, 11), v.p);
  const AffineMatrix Xb11p = scaled_block_diagonal(blocks_of(spec.Xbar, 11), v.pbar);
  const BlockSpec* specs[6] = {&spec.uy, &spec.uyb, &spec.uw, &spec.uby, &spec.ubyb, &spec.ubw};
  const char* names[6] = {"L_uy", "L_uyb", "L_uw", "L_uby", "L_ubyb", "L_ubw"};
  for (int k = 0; k < 6; ++k) {
    const BlockSpec& b = *specs[k];
    if (b.free) {
      v.L.push_back(free_matrix(prob, names[k], b.mask, k == 0 ? &v.Luy_entries : nullptr));
    } else {
      const AffineMatrix& S = k < 3 ? X11p : Xb11p;
      if (S.cols() != b.fixed.rows())
        throw Error(ErrorKind::DimensionMismatch, std::string(names[k]) + " has wrong row count");
      v.L.push_back(S * b.fixed);
    }
  }
  return v;
}

AffineMatrix topology_lmi(const TopologySpec& spec, const TopologyVariables& v) {
  const int nu = total_dim(spec.X, false), ny = total_dim(spec.X, true);
  const int nub = total_dim(spec.Xbar, false), nyb = total_dim(spec.Xbar, true);
  const int nz = static_cast<int>(spec.Y.X22.rows()), nw = static_cast<int>(spec.Y.X11.rows());
  const AffineMatrix X11p = scaled_block_diagonal(blocks_of(spec.X, 11), v.p);
  const AffineMatrix X22p = scaled_block_diagonal(blocks_of(spec.X, 22), v.p);
  const AffineMatrix Xb11p = scaled_block_diagonal(blocks_of(spec.Xbar, 11), v.pbar);
  const AffineMatrix Xb22p = scaled_block_diagonal(blocks_of(spec.Xbar, 22), v.pbar);
  const MatrixXd X12 = block_diagonal(blocks_of(spec.X, 12));
  const MatrixXd X21 = block_diagonal(blocks_of(spec.X, 21));
  const MatrixXd Xb12 = block_diagonal(blocks_of(spec.Xbar, 12));
  const MatrixXd Xb21 = block_diagonal(blocks_of(spec.Xbar, 21));
  const MatrixXd& Y11 = spec.Y.X11;
  const MatrixXd& Y12 = spec.Y.X12;
  const MatrixXd& Y21 = spec.Y.X21;
  const MatrixXd& Y22 = spec.Y.X22;
  const auto& L = v.L;

  auto C = [](const MatrixXd& m) { return AffineMatrix::constant(m); };
  const AffineMatrix Y11e = v.gamma ? AffineMatrix::term(*v.gamma, MatrixXd::Identity(nw, nw)) : C(Y11);

  const AffineMatrix b44 = -1.0 * (L[0].transpose() * X12 + X21 * L[0]) - X22p;
  const AffineMatrix b45 = -1.0 * (X21 * L[1]) - L[3].transpose() * Xb12;
  const AffineMatrix b46 = -1.0 * (X21 * L[2]) + C(spec.zy.transpose() * Y21);
  const AffineMatrix b55 = -1.0 * (L[4].transpose() * Xb12 + Xb21 * L[4]) - Xb22p;
  const AffineMatrix b56 = -1.0 * (Xb21 * L[5]) + C(spec.zyb.transpose() * Y21);
  const AffineMatrix b66 = Y11e + C(Y12 * spec.zw + spec.zw.transpose() * Y21);

  const AffineMatrix E;
  return lmi::symmetric_blocks(
      {{X11p, E, E, L[0], L[1], L[2]},
       {E, Xb11p, E, L[3], L[4], L[5]},
       {E, E, C(-Y22), C(-Y22 * spec.zy), C(-Y22 * spec.zyb), C(-Y22 * spec.zw)},
       {E, E, E, b44, b45, b46},
       {E, E, E, E, b55, b56},
       {E, E, E, E, E, b66}},
      {nu, nub, nz, ny, nyb, nw});
}

TopologyResult synthesize_topology(const TopologySpec& spec, const lmi::SolverOptions& options) {
  check_topology_assumptions(spec);
  lmi::SDPProblem prob;
  const TopologyVariables v = declare_topology_variables(prob, spec);
  for (std::size_t k = 0; k < v.p.size(); ++k) prob.add_linear("p_pos" + std::to_string(k), LinExpr(v.p[k]));
  for (std::size_t k = 0; k < v.pbar.size(); ++k)
    prob.add_linear("pbar_pos" + std::to_string(k), LinExpr(v.pbar[k]));
  if (v.gamma) {
    prob.add_linear("gamma_pos", LinExpr(*v.gamma));
    prob.add_linear("gamma_bar", LinExpr(spec.gamma_bar) - LinExpr(*v.gamma));
    prob.add_objective(spec.c0 * LinExpr(*v.gamma));
  }
  if (spec.weights_uy.size() > 0 && spec.uy.free) {
    std::vector<lmi::Var> entries;
    std::vector<double> weights;
    for (std::size_t i = 0; i < v.Luy_entries.size(); ++i)
      for (std::size_t j = 0; j < v.Luy_entries[i].size(); ++j)
        if (v.Luy_entries[i][j]) {
          entries.push_back(*v.Luy_entries[i][j]);
          weights.push_back(spec.weights_uy(int(i), int(j)));
        }
    prob.add_l1_epigraph(entries, weights, "l1_uy");
  }
  prob.add_lmi("topology", topology_lmi(spec, v), true);
  const lmi::SDPSolution sol = lmi::solve(prob, options);

  TopologyResult out;
  out.status = sol.status;
  out.diagnostics = sol.diagnostics;
  if (!sol.ok()) return out;
  for (const auto& var : v.p) out.p.push_back(sol.value(var));
  for (const auto& var : v.pbar) out.pbar.push_back(sol.value(var));
  if (v.gamma) out.gamma = sol.value(*v.gamma);
  out.residual = lmi::min_eigenvalue(topology_lmi(spec, v).evaluate(sol.values));

  const MatrixXd X11p = scaled_block_diagonal(blocks_of(spec.X, 11), v.p).evaluate(sol.values);
  const MatrixXd Xb11p =
      scaled_block_diagonal(blocks_of(spec.Xbar, 11), v.pbar).evaluate(sol.values);
  auto recover = [&](int k, const MatrixXd& S) -> MatrixXd {
    const BlockSpec* specs[6] = {&spec.uy, &spec.uyb, &spec.uw, &spec.uby, &spec.ubyb, &spec.ubw};
    if (!specs[k]->free) return specs[k]->fixed;
    const MatrixXd Lk = v.L[k].evaluate(sol.values);
    if (S.rows() == 0) return Lk;
    return S.ldlt().solve(Lk);
  };
  out.M.uy = recover(0, X11p);
  out.M.uyb = recover(1, X11p);
  out.M.uw = recover(2, X11p);
  out.M.uby = recover(3, Xb11p);
  out.M.ubyb = recover(4, Xb11p);
  out.M.ubw = recover(5, Xb11p);
  out.M.zy = spec.zy;
  out.M.zyb = spec.zyb;
  out.M.zw = spec.zw;
  return out;
}

}  // namespace mgc
