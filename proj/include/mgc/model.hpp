// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mgc {

// DGs are indexed 0..N-1 and lines 0..L-1 throughout the public interface.
struct DGParams {
  double R_t = 0.0;  // filter resistance [Ohm]
  double L_t = 0.0;  // filter inductance [H]
  double C_t = 0.0;  // filter capacitance [F]
  double V_r = 0.0;  // voltage reference [V]
};

struct ZipLoad {
  double I_const = 0.0;  // constant current [A]
  double Y_L = 0.0;      // conductance [S]
  double P_star = 0.0;   // constant power [W]
};

struct LineParams {
  double R = 0.0;  // [Ohm]
  double L = 0.0;  // [H]
  int from_dg = 0;
  int to_dg = 0;
};

struct DGUnit {
  DGParams params;
  ZipLoad load;
};

struct MicrogridSpec {
  std::vector<DGUnit> dgs;
  std::vector<LineParams> lines;
};

struct Violation {
  std::string kind;   // error kind name
  std::string field;  // offending field path, e.g. dgs[1].C_t
  std::string message;
};

// Signed DG-by-line incidence: +1 where the line leaves the DG, -1 where it enters.
using IncidenceMatrix = Eigen::MatrixXd;

struct DGStateSpace {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  Eigen::RowVector3d H;  // performance row selecting the integrator state
  Eigen::Vector3d d;     // constant exogenous input (-I_const/C_t, 0, V_r)
};

struct LineStateSpace {
  double A = 0.0;  // -R/L
  double B = 0.0;  // 1/L
};

struct CouplingBlocks {
  // Cbar[i][l]: 3x1 effect of line current l on DG i; Cmat[l][i]: 1x3 effect of DG i on line l.
  std::vector<std::vector<Eigen::Vector3d>> Cbar;
  std::vector<std::vector<Eigen::RowVector3d>> Cmat;
  Eigen::Matrix3d D;  // performance selector diag(0, 0, 1)

  Eigen::MatrixXd Cbar_full() const;  // 3N x L
  Eigen::MatrixXd Cmat_full() const;  // L x 3N
  Eigen::MatrixXd D_full() const;     // 3N x 3N
};

struct ValidatedModel {
  MicrogridSpec spec;
  IncidenceMatrix B;

  int num_dgs() const { return static_cast<int>(spec.dgs.size()); }
  int num_lines() const { return static_cast<int>(spec.lines.size()); }
  // Line indices incident to DG i.
  std::vector<int> incident_lines(int i) const;
};

// Full list of problems with the description; empty when valid.
std::vector<Violation> find_violations(const MicrogridSpec& spec);
// Throws mgc::Error carrying the first violation's kind.
ValidatedModel validate(const MicrogridSpec& spec);
bool is_connected(int n, const std::vector<LineParams>& lines);

IncidenceMatrix incidence_matrix(const std::vector<LineParams>& lines, int n);
DGStateSpace dg_matrices(const DGParams& dg, const ZipLoad& load);
LineStateSpace line_matrices(const LineParams& line);
double zip_current(const ZipLoad& load, double V, double V_min = 0.0);
double cpl_voltage_floor(const DGParams& dg);
CouplingBlocks coupling_blocks(const ValidatedModel& model);

}  // namespace mgc
