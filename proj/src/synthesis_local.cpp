// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgc/errors.hpp"
#include "mgc/synthesis.hpp"

namespace mgc {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using lmi::AffineMatrix;
using lmi::LinExpr;

namespace {

constexpr double kNuBackoff = 1.01;
constexpr double kRhoBackoff = 0.99;
constexpr double kDgNuFraction = 0.02;

double gain_scale(const MatrixXd& A, const MatrixXd& B) {
  return std::max(1.0, A.cwiseAbs().maxCoeff()) / std::max(1e-12, B.cwiseAbs().maxCoeff());
}

[[noreturn]] void fail(lmi::SolveStatus status, const std::string& what, const std::string& stage) {
  throw Error(status == lmi::SolveStatus::Infeasible ? ErrorKind::Infeasible
                                                     : ErrorKind::SolverFailure,
              what, stage);
}

}  // namespace

DGLocalResult synth_dg_local(const DGUnit& dg, const Matrix3d& T, double omega, double p,
                             const SynthesisConfig& config, const lmi::SolverOptions& options) {
  if (!(p > 0.0)) throw Error(ErrorKind::NonPositiveParameter, "p must be positive");
  const DGStateSpace ss = dg_matrices(dg.params, dg.load);
  const Matrix3d Ti = T.inverse();
  const MatrixXd Ah = Ti * ss.A * T / omega;
  const MatrixXd Bh = Ti * ss.B / omega;
  const double gamma_bar = config.gamma_bar;
  const double nu_cap = -kDgNuFraction * 0.5 * gamma_bar / p;
  const double f = config.rho_tilde_fraction;
  const MatrixXd I = MatrixXd::Identity(3, 3);

  lmi::SDPProblem prob;
  const lmi::SymmetricVar Pv = prob.add_symmetric("P", 3);
  const AffineMatrix P = Pv.expr();
  const AffineMatrix K = matrix_variable(prob, "K", 1, 3, gain_scale(Ah, Bh));
  const lmi::Var nu = prob.add_variable("nu", std::abs(nu_cap));
  const lmi::Var rt = prob.add_variable("rho_tilde", f * std::min(p, 2.0 * gamma_bar / p));
  const lmi::Var g = prob.add_variable("gamma_i", 0.5 * gamma_bar);
  prob.add_lmi("synthesis",
               synthesis_affine(Ah, Bh, AffineMatrix::term(rt, I), AffineMatrix::term(nu, -I),
                                0.5 * I, P, K),
               true);
  prob.add_lmi("P", P, true);
  prob.add_linear("dg_nu_vs_gamma", LinExpr::term(nu, p) + LinExpr(g), true);
  prob.add_linear("nu_cap", LinExpr(nu_cap) - LinExpr(nu), false);
  prob.add_linear("rho_tilde", LinExpr(rt), true);
  prob.add_linear("dg_rho_vs_p", LinExpr(f * p) - LinExpr(rt), false);
  prob.add_linear("dg_rho_vs_gamma", LinExpr::term(g, 4.0 * f / p) - LinExpr(rt), false);
  prob.add_linear("gamma_i", LinExpr(g), true);
  prob.add_linear("gamma_bar", LinExpr(gamma_bar) - LinExpr(g), true);
  prob.add_objective(-1.0 * LinExpr(nu));

  const lmi::SDPSolution sol = lmi::solve(prob, options);
  if (!sol.ok()) fail(sol.status, "DG local synthesis: " + sol.diagnostics, "dg_local");

  DGLocalResult r;
  r.P = Pv.value(sol.values);
  const MatrixXd Kt = K.evaluate(sol.values);
  const double nu_s = sol.value(nu);
  const double rt_s = sol.value(rt);
  r.lmi_residual = lmi::min_eigenvalue(
      synthesis_matrix(Ah, Bh, make_ifofp(nu_s, 1.0 / rt_s, 3), r.P, Kt));
  const MatrixXd Khat = recover_gain(Kt, r.P);
  r.K_io = (Khat * Ti).row(0);
  r.indices.nu = kNuBackoff * nu_s;
  r.indices.rho = kRhoBackoff / rt_s;
  r.indices.rho_tilde = 1.0 / r.indices.rho;
  r.indices.gamma_i = sol.value(g);

  // Round trip of the returned physical gain, viewed in the synthesis coordinates.
  const MatrixXd Acl = Ti * (ss.A + ss.B * r.K_io) * T / omega;
  const XeidResult cert = check_xeid(Acl, MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3),
                                     MatrixXd::Zero(3, 3),
                                     make_ifofp(r.indices.nu, r.indices.rho, 3), options);
  if (!cert.feasible())
    throw Error(ErrorKind::SolverFailure,
                "DG local gain fails its dissipativity round trip: " + cert.diagnostics, "dg_local");
  r.certificate_residual = cert.certificate->residual;
  std::ostringstream os;
  os << "nu=" << r.indices.nu << " rho=" << r.indices.rho << " gamma_i=" << r.indices.gamma_i
     << " iterations=" << sol.iterations;
  r.diagnostics = os.str();
  return r;
}

LineLocalResult synth_line_local(const LineParams& line, double t, double omega, double p_bar,
                                 const std::vector<LineRequirement>& reqs, double rho_floor,
                                 const SynthesisConfig& config, const lmi::SolverOptions& options) {
  if (!(p_bar > 0.0)) throw Error(ErrorKind::NonPositiveParameter, "p_bar must be positive");
  const LineStateSpace ss = line_matrices(line);
  const double a = ss.A / omega;
  const double bh = ss.B / (t * omega);

  double req = std::max(0.0, rho_floor);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& q : reqs) {
    req = std::max(req, q.rho_min);
    lo = std::max(lo, q.nu_lo);
    hi = std::min(hi, q.nu_hi);
  }
  const double f = config.line_nu_fraction;
  double nu_min, nu_max;
  if (std::isfinite(lo)) {
    if (!(lo < hi)) throw Error(ErrorKind::Infeasible, "empty nu_bar interval", "line_local");
    nu_min = lo + f * (hi - lo);
    nu_max = hi - f * (hi - lo);
  } else if (hi < 0.0) {
    nu_min = 100.0 * hi;
    nu_max = (1.0 + f) * hi;
  } else {
    nu_min = -1.0;
    nu_max = -f;
  }
  const double rho_min = req > 0.0 ? config.line_rho_margin * req : 1.0;

  LineLocalResult r;
  const MatrixXd A1 = MatrixXd::Constant(1, 1, a);
  const MatrixXd I1 = MatrixXd::Identity(1, 1);
  const MatrixXd Z = MatrixXd::Zero(1, 1);

  // The uncontrolled line is kept when it already meets the requirement.
  const XeidResult open = check_xeid(A1, I1, I1, Z, make_ifofp(nu_min, rho_min, 1), options);
  if (open.feasible() && open.certificate->residual > 0.0) {
    r.K_lo = 0.0;
    r.P = 1.0 / open.certificate->P(0, 0);
    r.indices = {nu_min, rho_min};
    r.open_loop = true;
    r.lmi_residual = open.certificate->residual;
    r.certificate_residual = open.certificate->residual;
    r.diagnostics = "open loop meets the requirement";
    return r;
  }

  const MatrixXd Ah = A1;
  const MatrixXd Bh = MatrixXd::Constant(1, 1, bh);
  const MatrixXd I = MatrixXd::Identity(1, 1);
  lmi::SDPProblem prob;
  const lmi::SymmetricVar Pv = prob.add_symmetric("P", 1);
  const AffineMatrix P = Pv.expr();
  const AffineMatrix K = matrix_variable(prob, "K", 1, 1, gain_scale(Ah, Bh));
  const lmi::Var nu = prob.add_variable("nu_bar", std::abs(nu_max));
  const lmi::Var rt = prob.add_variable("rho_bar_inv", 1.0 / rho_min);
  prob.add_lmi("synthesis",
               synthesis_affine(Ah, Bh, AffineMatrix::term(rt, I), AffineMatrix::term(nu, -I),
                                0.5 * I, P, K),
               true);
  prob.add_lmi("P", P, true);
  prob.add_linear("rho_bar", LinExpr(1.0 / rho_min) - LinExpr(rt), false);
  prob.add_linear("rho_bar_inv", LinExpr(rt), true);
  prob.add_linear("nu_bar_lo", LinExpr(nu) - LinExpr(nu_min), false);
  prob.add_linear("nu_bar_hi", LinExpr(nu_max) - LinExpr(nu), false);
  prob.add_objective(-1.0 * LinExpr(nu));

  const lmi::SDPSolution sol = lmi::solve(prob, options);
  if (!sol.ok()) fail(sol.status, "line local synthesis: " + sol.diagnostics, "line_local");
  r.P = Pv.value(sol.values)(0, 0);
  const double kt = K.evaluate(sol.values)(0, 0);
  const double nu_s = sol.value(nu);
  const double rt_s = sol.value(rt);
  r.lmi_residual = lmi::min_eigenvalue(synthesis_matrix(
      Ah, Bh, make_ifofp(nu_s, 1.0 / rt_s, 1), MatrixXd::Constant(1, 1, r.P),
      MatrixXd::Constant(1, 1, kt)));
  r.K_lo = kt / r.P / t;
  r.indices.nu = std::max(nu_min, kNuBackoff * nu_s);
  r.indices.rho = std::max(rho_min, kRhoBackoff / rt_s);

  const XeidResult cert = check_xeid(MatrixXd::Constant(1, 1, a + ss.B * r.K_lo / omega), I1, I1, Z,
                                     make_ifofp(r.indices.nu, r.indices.rho, 1), options);
  if (!cert.feasible())
    throw Error(ErrorKind::SolverFailure,
                "line local gain fails its dissipativity round trip: " + cert.diagnostics,
                "line_local");
  r.certificate_residual = cert.certificate->residual;
  std::ostringstream os;
  os << "nu_bar=" << r.indices.nu << " rho_bar=" << r.indices.rho << " K_lo=" << r.K_lo
     << " iterations=" << sol.iterations;
  r.diagnostics = os.str();
  return r;
}

}  // namespace mgc
