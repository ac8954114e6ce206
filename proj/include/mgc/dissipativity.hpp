// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "mgc/lmi.hpp"

namespace mgc {

enum class SupplyKind { Passive, IFOFP, L2Gain };

// Quadratic supply rate s(u, y) = [u; y]' X [u; y] with equally sized blocks.
struct SupplyRate {
  SupplyKind kind = SupplyKind::Passive;
  double nu = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  Eigen::MatrixXd X11, X12, X21, X22;

  int dim() const { return static_cast<int>(X11.rows()); }
  Eigen::MatrixXd full() const;
};

SupplyRate make_passive(int dim = 1);
SupplyRate make_ifofp(double nu, double rho, int dim = 1);
SupplyRate make_l2gain(double gamma, int dim = 1);

struct EIDCertificate {
  Eigen::MatrixXd P;
  double residual = 0.0;  // smallest eigenvalue of the dissipation matrix at P
};

struct XeidResult {
  lmi::SolveStatus status = lmi::SolveStatus::Failure;
  std::optional<EIDCertificate> certificate;
  std::string diagnostics;
  bool feasible() const { return certificate.has_value(); }
};

// [-(PA + A'P) + C'X22C, -PB + C'X21 + C'X22D; *, X11 + X12D + D'X21 + D'X22D]
Eigen::MatrixXd dissipation_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& C, const Eigen::MatrixXd& D,
                                   const SupplyRate& X, const Eigen::MatrixXd& P);

XeidResult check_xeid(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const Eigen::MatrixXd& C, const Eigen::MatrixXd& D, const SupplyRate& X,
                      const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

struct LocalSynthResult {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  Eigen::MatrixXd L;  // K P^{-1}
  double residual = 0.0;
};

struct LocalSynthOutcome {
  lmi::SolveStatus status = lmi::SolveStatus::Failure;
  std::optional<LocalSynthResult> result;
  std::string diagnostics;
  bool feasible() const { return result.has_value(); }
};

// [-X22^{-1}, P, 0; P, -(AP + BK) - (AP + BK)', -I + P X21; 0, *, X11]
Eigen::MatrixXd synthesis_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const SupplyRate& X, const Eigen::MatrixXd& P,
                                 const Eigen::MatrixXd& K);

// State-feedback u = L x making x' = (A + BL)x + eta, y = x X-EID from eta to x.
LocalSynthOutcome synth_local_xeid(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const SupplyRate& X,
                                   const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

// Affine builders shared with the synthesis module.
lmi::AffineMatrix matrix_variable(lmi::SDPProblem& problem, const std::string& name, int rows,
                                  int cols, double scale = 1.0);
lmi::AffineMatrix synthesis_affine(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const lmi::AffineMatrix& neg_inv_X22,
                                   const lmi::AffineMatrix& X11, const Eigen::MatrixXd& X21,
                                   const lmi::AffineMatrix& P, const lmi::AffineMatrix& K);

// Gain recovery L = K P^{-1} through a Cholesky solve.
Eigen::MatrixXd recover_gain(const Eigen::MatrixXd& K, const Eigen::MatrixXd& P);

}  // namespace mgc
