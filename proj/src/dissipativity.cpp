// SPDX-License-Identifier: Apache-2.0
#include "mgc/dissipativity.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "mgc/errors.hpp"

namespace mgc {

using Eigen::MatrixXd;
using lmi::AffineMatrix;
using lmi::LinExpr;

MatrixXd SupplyRate::full() const {
  const int n = dim();
  MatrixXd x(2 * n, 2 * n);
  x << X11, X12, X21, X22;
  return x;
}

SupplyRate make_passive(int dim) {
  SupplyRate s;
  s.kind = SupplyKind::Passive;
  const MatrixXd I = MatrixXd::Identity(dim, dim);
  s.X11 = MatrixXd::Zero(dim, dim);
  s.X12 = 0.5 * I;
  s.X21 = 0.5 * I;
  s.X22 = MatrixXd::Zero(dim, dim);
  return s;
}

SupplyRate make_ifofp(double nu, double rho, int dim) {
  SupplyRate s;
  s.kind = SupplyKind::IFOFP;
  s.nu = nu;
  s.rho = rho;
  const MatrixXd I = MatrixXd::Identity(dim, dim);
  s.X11 = -nu * I;
  s.X12 = 0.5 * I;
  s.X21 = 0.5 * I;
  s.X22 = -rho * I;
  return s;
}

SupplyRate make_l2gain(double gamma, int dim) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw Error(ErrorKind::NonPositiveGamma, "L2 gain must be positive");
  SupplyRate s;
  s.kind = SupplyKind::L2Gain;
  s.gamma = gamma;
  const MatrixXd I = MatrixXd::Identity(dim, dim);
  s.X11 = gamma * gamma * I;
  s.X12 = MatrixXd::Zero(dim, dim);
  s.X21 = MatrixXd::Zero(dim, dim);
  s.X22 = -I;
  return s;
}

namespace {

void check_dims(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D,
                const SupplyRate& X) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() ||
      D.cols() != B.cols() || X.dim() != B.cols() || X.X22.rows() != C.rows())
    throw Error(ErrorKind::DimensionMismatch, "state-space and supply-rate dimensions differ");
}

}  // namespace

MatrixXd dissipation_matrix(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C,
                            const MatrixXd& D, const SupplyRate& X, const MatrixXd& P) {
  check_dims(A, B, C, D, X);
  const auto n = A.rows();
  const auto m = B.cols();
  MatrixXd M(n + m, n + m);
  M.topLeftCorner(n, n) = -(P * A + A.transpose() * P) + C.transpose() * X.X22 * C;
  M.topRightCorner(n, m) = -P * B + C.transpose() * X.X21 + C.transpose() * X.X22 * D;
  M.bottomLeftCorner(m, n) = M.topRightCorner(n, m).transpose();
  M.bottomRightCorner(m, m) =
      X.X11 + X.X12 * D + D.transpose() * X.X21 + D.transpose() * X.X22 * D;
  return M;
}

XeidResult check_xeid(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C,
                      const MatrixXd& D, const SupplyRate& X, const lmi::SolverOptions& options) {
  check_dims(A, B, C, D, X);
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  lmi::SDPProblem prob;
  // Typical storage size from the balance of the cross and output terms.
  const double amax = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double bmax = B.cwiseAbs().maxCoeff();
  const double cross = (C.transpose() * (X.X21 + X.X22 * D)).cwiseAbs().maxCoeff();
  const double outp = (C.transpose() * X.X22 * C).cwiseAbs().maxCoeff() / amax;
  double pscale = bmax > 0.0 ? std::max(cross / bmax, outp) : outp;
  if (!(pscale > 0.0) || !std::isfinite(pscale)) pscale = 1.0 / amax;
  lmi::SymmetricVar Pv = prob.add_symmetric("P", n, pscale);
  const AffineMatrix P = Pv.expr();
  AffineMatrix M(n + m, n + m);
  const MatrixXd At = A.transpose();
  const MatrixXd Ct = C.transpose();
  M.set_block(0, 0, -1.0 * (P * A + At * P) + AffineMatrix::constant(Ct * X.X22 * C));
  AffineMatrix off = -1.0 * (P * B) + AffineMatrix::constant(Ct * X.X21 + Ct * X.X22 * D);
  M.set_block(0, n, off);
  M.set_block(n, 0, off.transpose());
  M.set_block(n, n, AffineMatrix::constant(X.X11 + X.X12 * D + D.transpose() * X.X21 +
                                           D.transpose() * X.X22 * D));
  prob.add_lmi("P", P, true);
  prob.add_lmi("dissipation", M, false);

  const lmi::SDPSolution sol = lmi::solve(prob, options);
  XeidResult r;
  r.status = sol.status;
  r.diagnostics = sol.diagnostics;
  if (sol.ok()) {
    EIDCertificate c;
    c.P = Pv.value(sol.values);
    c.residual = lmi::min_eigenvalue(dissipation_matrix(A, B, C, D, X, c.P));
    r.certificate = c;
  } else if (sol.status == lmi::SolveStatus::Failure) {
    r.diagnostics = "solver failure: " + sol.diagnostics;
  }
  return r;
}

MatrixXd synthesis_matrix(const MatrixXd& A, const MatrixXd& B, const SupplyRate& X,
                          const MatrixXd& P, const MatrixXd& K) {
  const auto n = A.rows();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd AP = A * P + B * K;
  MatrixXd M = MatrixXd::Zero(3 * n, 3 * n);
  M.block(0, 0, n, n) = -X.X22.inverse();
  M.block(0, n, n, n) = P;
  M.block(n, 0, n, n) = P;
  M.block(n, n, n, n) = -(AP + AP.transpose());
  M.block(n, 2 * n, n, n) = -I + P * X.X21;
  M.block(2 * n, n, n, n) = (-I + P * X.X21).transpose();
  M.block(2 * n, 2 * n, n, n) = X.X11;
  return M;
}

AffineMatrix matrix_variable(lmi::SDPProblem& problem, const std::string& name, int rows,
                             int cols, double scale) {
  AffineMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      m(i, j) = LinExpr(problem.add_variable(
          name + "[" + std::to_string(i) + "," + std::to_string(j) + "]", scale));
  return m;
}

AffineMatrix synthesis_affine(const MatrixXd& A, const MatrixXd& B,
                              const AffineMatrix& neg_inv_X22, const AffineMatrix& X11,
                              const MatrixXd& X21, const AffineMatrix& P, const AffineMatrix& K) {
  const int n = static_cast<int>(A.rows());
  const MatrixXd I = MatrixXd::Identity(n, n);
  const AffineMatrix APBK = A * P + B * K;
  const AffineMatrix mid = -1.0 * (APBK + APBK.transpose());
  const AffineMatrix cross = AffineMatrix::constant(-I) + P * X21;
  const AffineMatrix Z(n, n);
  return lmi::symmetric_blocks({{neg_inv_X22, P, Z}, {{}, mid, cross}, {{}, {}, X11}},
                               {n, n, n});
}

MatrixXd recover_gain(const MatrixXd& K, const MatrixXd& P) {
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::SolverFailure, "storage matrix is not positive definite");
  return llt.solve(K.transpose()).transpose();
}

LocalSynthOutcome synth_local_xeid(const MatrixXd& A, const MatrixXd& B, const SupplyRate& X,
                                   const lmi::SolverOptions& options) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n || X.dim() != n)
    throw Error(ErrorKind::DimensionMismatch, "synthesis expects square A and n-dimensional X");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (X.X22 + X.X22.transpose()),
                                             Eigen::EigenvaluesOnly);
  if (es.eigenvalues().maxCoeff() >= 0.0)
    throw Error(ErrorKind::X22NotNegative, "X22 must be negative definite");

  const double bscale =
      std::max(1.0, A.cwiseAbs().maxCoeff()) / std::max(1e-12, B.cwiseAbs().maxCoeff());
  // First pass: largest lower bound sigma <= 1 on P. Second pass: with P >= sigma/2 I,
  // smallest spectral-norm bound on K, which keeps L = K P^{-1} moderate.
  double sigma = 0.0;
  lmi::SDPSolution sol;
  lmi::SymmetricVar Pv;
  AffineMatrix K;
  for (int pass = 0; pass < 2; ++pass) {
    lmi::SDPProblem prob;
    Pv = prob.add_symmetric("P", n);
    const AffineMatrix P = Pv.expr();
    K = matrix_variable(prob, "K", m, n, bscale);
    prob.add_lmi("synthesis",
                 synthesis_affine(A, B, AffineMatrix::constant(-X.X22.inverse()),
                                  AffineMatrix::constant(X.X11), X.X21, P, K),
                 true);
    const MatrixXd In = MatrixXd::Identity(n, n);
    if (pass == 0) {
      const lmi::Var s = prob.add_variable("sigma");
      prob.add_lmi("P", P - AffineMatrix::term(s, In), true);
      prob.add_linear("sigma_cap", LinExpr(1.0) - LinExpr(s), false);
      prob.add_linear("sigma", LinExpr(s), true);
      prob.add_objective(-1.0 * LinExpr(s));
      sol = lmi::solve(prob, options);
      if (!sol.ok()) break;
      sigma = sol.value(s);
    } else {
      prob.add_lmi("P", P - AffineMatrix::constant(0.5 * sigma * In), true);
      const lmi::Var kappa = prob.add_variable("kappa", bscale);
      const AffineMatrix kI = AffineMatrix::term(kappa, MatrixXd::Identity(m, m));
      const AffineMatrix nI = AffineMatrix::term(kappa, In);
      prob.add_lmi("gain_bound", lmi::symmetric_blocks({{kI, K}, {{}, nI}}, {m, n}), false);
      prob.add_objective(LinExpr(kappa));
      sol = lmi::solve(prob, options);
    }
  }

  LocalSynthOutcome out;
  out.status = sol.status;
  out.diagnostics = sol.diagnostics;
  if (!sol.ok()) return out;
  LocalSynthResult r;
  r.P = Pv.value(sol.values);
  r.K = K.evaluate(sol.values);
  r.L = recover_gain(r.K, r.P);
  r.residual = lmi::min_eigenvalue(synthesis_matrix(A, B, X, r.P, r.K));
  out.result = r;
  return out;
}

}  // namespace mgc
