// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mgc/dissipativity.hpp"
#include "mgc/lmi.hpp"
#include "mgc/model.hpp"

namespace mgc {

// Static map [u; ubar; z] = M [y; ybar; w] between subsystem outputs and inputs.
struct InterconnectionM {
  Eigen::MatrixXd uy, uyb, uw;
  Eigen::MatrixXd uby, ubyb, ubw;
  Eigen::MatrixXd zy, zyb, zw;

  Eigen::MatrixXd full() const;
};

// Throws StructureViolation when K has nonzeros outside the middle row of each 3x3 block.
void check_gain_structure(const Eigen::MatrixXd& K);

// Microgrid instance: M_uy = K, M_uyb = Cbar, M_uw = I, M_uby = C, remaining blocks zero
// except M_zy = D.
InterconnectionM assemble_m(const Eigen::MatrixXd& K, const CouplingBlocks& coupling);

// Quadratic form of the network dissipation inequality, W' diag(Xp, Xbar_p, -Y) W.
Eigen::MatrixXd analysis_matrix(const InterconnectionM& M, const std::vector<SupplyRate>& X,
                                const std::vector<SupplyRate>& Xbar, const SupplyRate& Y,
                                const std::vector<double>& p, const std::vector<double>& pbar);

struct NetworkAnalysis {
  lmi::SolveStatus status = lmi::SolveStatus::Failure;
  std::vector<double> p;
  std::vector<double> pbar;
  double residual = 0.0;  // -max eigenvalue of the analysis matrix
  std::string diagnostics;
  bool feasible() const {
    return status == lmi::SolveStatus::Optimal || status == lmi::SolveStatus::Feasible;
  }
};

// Checks the given scalings, or searches p, pbar >= 0 when they are absent.
NetworkAnalysis analyze_network(const InterconnectionM& M, const std::vector<SupplyRate>& X,
                                const std::vector<SupplyRate>& Xbar, const SupplyRate& Y,
                                const std::optional<std::vector<double>>& p = std::nullopt,
                                const std::optional<std::vector<double>>& pbar = std::nullopt,
                                double tol = 1e-9,
                                const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

// One M_u or M_ubar block: either fixed, or free on the entries where mask != 0.
struct BlockSpec {
  bool free = false;
  Eigen::MatrixXd fixed;
  Eigen::MatrixXd mask;

  static BlockSpec fixed_block(const Eigen::MatrixXd& m) { return {false, m, {}}; }
  static BlockSpec free_block(const Eigen::MatrixXd& mask) { return {true, {}, mask}; }
  int rows() const { return static_cast<int>(free ? mask.rows() : fixed.rows()); }
  int cols() const { return static_cast<int>(free ? mask.cols() : fixed.cols()); }
};

struct TopologySpec {
  std::vector<SupplyRate> X;     // first subsystem class
  std::vector<SupplyRate> Xbar;  // second subsystem class
  SupplyRate Y;                  // network specification
  BlockSpec uy, uyb, uw, uby, ubyb, ubw;
  Eigen::MatrixXd zy, zyb, zw;
  // Replaces Y11 by gamma * I with 0 < gamma < gamma_bar as a decision variable.
  bool gamma_variable = false;
  double gamma_bar = 10.0;
  double c0 = 1.0;
  // Per-entry L1 weights on the free entries of L_uy; empty means no sparsity term.
  Eigen::MatrixXd weights_uy;
};

struct TopologyVariables {
  std::vector<lmi::Var> p;
  std::vector<lmi::Var> pbar;
  std::optional<lmi::Var> gamma;
  // L blocks in the order uy, uyb, uw, uby, ubyb, ubw; free entries are variables.
  std::vector<lmi::AffineMatrix> L;
  std::vector<std::vector<std::optional<lmi::Var>>> Luy_entries;
};

// Declares p, pbar, gamma and the free L entries in `problem`.
TopologyVariables declare_topology_variables(lmi::SDPProblem& problem, const TopologySpec& spec);
// Assembles the topology-synthesis LMI in the block order (u, ubar, z, y, ybar, w).
lmi::AffineMatrix topology_lmi(const TopologySpec& spec, const TopologyVariables& vars);
// Throws AssumptionViolated unless Y22 < 0 and every X11, Xbar11 > 0.
void check_topology_assumptions(const TopologySpec& spec);

struct TopologyResult {
  lmi::SolveStatus status = lmi::SolveStatus::Failure;
  InterconnectionM M;
  std::vector<double> p;
  std::vector<double> pbar;
  double gamma = 0.0;
  double residual = 0.0;
  std::string diagnostics;
  bool feasible() const {
    return status == lmi::SolveStatus::Optimal || status == lmi::SolveStatus::Feasible;
  }
};

TopologyResult synthesize_topology(const TopologySpec& spec,
                                   const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

// Block-diagonal helpers shared with the synthesis module.
Eigen::MatrixXd block_diagonal(const std::vector<Eigen::MatrixXd>& blocks);
lmi::AffineMatrix scaled_block_diagonal(const std::vector<Eigen::MatrixXd>& blocks,
                                        const std::vector<lmi::Var>& scales);

}  // namespace mgc
