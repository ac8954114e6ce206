// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mgc/dissipativity.hpp"
#include "mgc/lmi.hpp"
#include "mgc/model.hpp"
#include "mgc/network.hpp"

namespace mgc {

// Closed forms of the line-index requirements: derived from the 2x2 principal minors of
// the global LMI, or as printed in the source text.
enum class ConditionMode { Rederived, Literal };
// Coordinates in which every local and global LMI is assembled.
enum class ScalingMode { Energy, None };

const char* to_string(ConditionMode m);
const char* to_string(ScalingMode m);

struct SynthesisConfig {
  std::optional<std::vector<double>> p;      // per DG; nullopt means 1.0 each
  std::optional<std::vector<double>> p_bar;  // per line; nullopt means 1.0 each
  double gamma_bar = 10.0;
  double c0 = 1.0;
  double c_offdiag = 1.0;
  ConditionMode mode = ConditionMode::Rederived;
  double prune_threshold = 1e-6;
  ScalingMode scaling = ScalingMode::Energy;
  double integrator_scale = 0.1;     // scale of the integrator state in energy coordinates
  double time_scale = 1.0;           // LMIs are posed in the normalized time time_scale * t
  double rho_tilde_fraction = 0.5;   // fraction of the admissible rho_tilde ceiling used locally
  double line_rho_margin = 2.0;      // line rho_bar headroom over the coupling requirement
  double line_nu_fraction = 0.01;    // relative distance of nu_bar from the ends of its interval
  int retries = 4;                   // scaling retries after global infeasibility
};

// x = T xhat for DGs and x = t xhat for lines; LMIs use the normalized time omega * t.
struct SubsystemScaling {
  std::vector<Eigen::Matrix3d> T;
  std::vector<double> t;
  double omega = 1.0;
};

SubsystemScaling make_scaling(const ValidatedModel& model, const SynthesisConfig& config);
// Coupling blocks in scaled coordinates and normalized time; D is unchanged.
CouplingBlocks scaled_coupling(const ValidatedModel& model, const SubsystemScaling& s);

struct DGIndices {
  double nu = 0.0;
  double rho = 0.0;
  double rho_tilde = 0.0;  // 1 / rho
  double gamma_i = 0.0;
};

struct LineIndices {
  double nu = 0.0;
  double rho = 0.0;
};

struct PassivityBudget {
  std::vector<DGIndices> dg;
  std::vector<LineIndices> line;
  std::vector<double> p;
  std::vector<double> p_bar;
  double gamma_tilde = 0.0;
  double gamma_bar = 10.0;
  double c0 = 1.0;
  double c_offdiag = 1.0;
};

// A necessary condition whose printed and re-derived forms disagree at a budget.
struct Discrepancy {
  std::string condition;
  int dg = -1;
  int line = -1;
  double literal_bound = 0.0;
  double rederived_bound = 0.0;
  std::string note;
};

// Requirement on a line's indices imposed by one endpoint DG.
struct LineRequirement {
  double rho_min = 0.0;  // rho_bar must exceed this
  double nu_lo = -std::numeric_limits<double>::infinity();  // nu_bar must exceed this
  double nu_hi = 0.0;                                       // nu_bar must stay below this
};

// Bounds from DG i on line l in the given coordinates.
LineRequirement line_requirement(const DGIndices& dg, double p, double p_bar, double cbar_il,
                                 double c_li, ConditionMode mode);

struct IndexFeasibility {
  PassivityBudget budget;
  std::vector<Discrepancy> discrepancies;
};

// Finds an interior index budget at fixed p, p_bar; throws Infeasible naming the
// condition whose interval is empty.
IndexFeasibility index_feasibility(const ValidatedModel& model, const SynthesisConfig& config);

// Literal and re-derived forms compared at the budget in physical coordinates.
std::vector<Discrepancy> discrepancy_log(const ValidatedModel& model, const PassivityBudget& b);

struct MinorCheck {
  std::string condition;
  int dg = -1;
  int line = -1;
  double min_eigenvalue = 0.0;
};

// Numerical 2x2 principal minors of the global LMI with zero distributed gains and
// per-DG gamma_i in place of the global gain.
std::vector<MinorCheck> necessary_minors(const PassivityBudget& b, const CouplingBlocks& scaled,
                                         double omega = 1.0);

struct DGLocalResult {
  Eigen::RowVector3d K_io;  // physical gain, u = K_io x
  Eigen::Matrix3d P;        // storage matrix in scaled coordinates
  DGIndices indices;
  double lmi_residual = 0.0;
  double certificate_residual = 0.0;  // round-trip dissipation residual
  std::string diagnostics;
};

DGLocalResult synth_dg_local(const DGUnit& dg, const Eigen::Matrix3d& T, double omega, double p,
                             const SynthesisConfig& config,
                             const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

struct LineLocalResult {
  double K_lo = 0.0;  // physical gain on the line current
  double P = 0.0;     // storage in scaled coordinates
  LineIndices indices;
  bool open_loop = false;  // true when K_lo = 0 already meets the requirement
  double lmi_residual = 0.0;
  double certificate_residual = 0.0;
  std::string diagnostics;
};

// `reqs` are the requirements of both endpoint DGs.
LineLocalResult synth_line_local(const LineParams& line, double t, double omega, double p_bar,
                                 const std::vector<LineRequirement>& reqs, double rho_floor,
                                 const SynthesisConfig& config,
                                 const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

// Fixed data of the global co-design LMI in scaled coordinates.
struct GlobalData {
  std::vector<DGIndices> dg;
  std::vector<LineIndices> line;
  Eigen::MatrixXd Cbar;  // 3N x L
  Eigen::MatrixXd C;     // L x 3N
  Eigen::MatrixXd D;     // 3N x 3N
  double w_gain = 1.0;   // disturbance input gain, 1 / omega

  int num_dgs() const { return static_cast<int>(dg.size()); }
  int num_lines() const { return static_cast<int>(line.size()); }
};

// Entries of Q that may be nonzero: middle rows, except the current-to-current diagonal entry.
Eigen::MatrixXd gain_pattern(int num_dgs);

// Numerical global LMI in block order (u, ubar, z, x, xbar, w); Gamma is the diagonal of
// the w-w block.
Eigen::MatrixXd global_matrix(const GlobalData& d, const Eigen::MatrixXd& Q,
                              const std::vector<double>& p, const std::vector<double>& p_bar,
                              const Eigen::VectorXd& Gamma);

// Affine assembly of the same matrix in the given variables.
lmi::AffineMatrix global_lmi(const GlobalData& d, const lmi::AffineMatrix& Q,
                             const std::vector<lmi::Var>& p, const std::vector<lmi::Var>& p_bar,
                             lmi::Var gamma);

// Generic topology-synthesis specification equivalent to the global LMI.
TopologySpec global_topology_spec(const GlobalData& d, double gamma_bar);

struct GlobalResult {
  lmi::SolveStatus status = lmi::SolveStatus::Failure;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Khat;  // distributed gain in scaled coordinates, physical time
  std::vector<double> p;
  std::vector<double> p_bar;
  double gamma_tilde = 0.0;
  double objective = 0.0;
  double residual = 0.0;
  std::string diagnostics;
  bool feasible() const {
    return status == lmi::SolveStatus::Optimal || status == lmi::SolveStatus::Feasible;
  }
};

GlobalResult synth_global(const GlobalData& d, const SynthesisConfig& config,
                          const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

struct Edge {
  int to = 0;    // DG whose input uses the measurement
  int from = 0;  // DG whose state is measured
  double weight = 0.0;
};

struct ControllerSet {
  std::vector<DGLocalResult> dgs;
  std::vector<LineLocalResult> lines;
  Eigen::MatrixXd K;     // physical distributed gain, 3N x 3N
  Eigen::MatrixXd Khat;  // scaled distributed gain
  std::vector<Edge> topology;
  PassivityBudget budget;
  SubsystemScaling scaling;
  double gamma_tilde = 0.0;
  double global_residual = 0.0;  // at the pruned gains
  double global_objective = 0.0;
  int attempts = 1;
  std::vector<Discrepancy> discrepancies;
  std::vector<std::string> diagnostics;

  // (k^V, k^I, k^v) with u_i = sum_j k_ij x_j.
  Eigen::RowVector3d k(int i, int j, const ValidatedModel& model) const;
};

// Previously certified local controllers that PnP resynthesis keeps unchanged.
struct LocalReuse {
  std::vector<std::optional<DGLocalResult>> dgs;
  std::vector<std::optional<LineLocalResult>> lines;
};

ControllerSet co_design(const ValidatedModel& model, const SynthesisConfig& config,
                        const LocalReuse& reuse = {},
                        const lmi::SolverOptions& options = lmi::SolverOptions::from_env());

// Edges with ||Khat_ij||_1 above threshold * max over i != j.
std::vector<Edge> extract_topology(const Eigen::MatrixXd& Khat, double threshold);

// Closed-loop linear matrix of the physical microgrid without loads' constant terms.
Eigen::MatrixXd closed_loop_matrix(const ValidatedModel& model, const ControllerSet& c);

// Data of the global LMI rebuilt from a controller set.
GlobalData global_data(const ValidatedModel& model, const ControllerSet& c);

}  // namespace mgc
