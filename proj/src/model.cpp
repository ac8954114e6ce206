// SPDX-License-Identifier: Apache-2.0
#include "mgc/model.hpp"

#include <cmath>
#include <numeric>

#include "mgc/errors.hpp"

namespace mgc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Schema: return "Schema";
    case ErrorKind::NonPositiveParameter: return "NonPositiveParameter";
    case ErrorKind::DuplicateLineEndpoints: return "DuplicateLineEndpoints";
    case ErrorKind::InvalidIndex: return "InvalidIndex";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::VoltageTooLowForCPL: return "VoltageTooLowForCPL";
    case ErrorKind::NonPositiveGamma: return "NonPositiveGamma";
    case ErrorKind::X22NotNegative: return "X22NotNegative";
    case ErrorKind::UnknownEntry: return "UnknownEntry";
    case ErrorKind::StructureViolation: return "StructureViolation";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::ZeroDisturbanceEnergy: return "ZeroDisturbanceEnergy";
    case ErrorKind::DisconnectsGraph: return "DisconnectsGraph";
    case ErrorKind::BundleMismatch: return "BundleMismatch";
    case ErrorKind::MissingInput: return "MissingInput";
  }
  return "?";
}

Eigen::MatrixXd CouplingBlocks::Cbar_full() const {
  const int n = static_cast<int>(Cbar.size());
  const int l = n > 0 ? static_cast<int>(Cbar[0].size()) : 0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * n, l);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < l; ++k) m.block<3, 1>(3 * i, k) = Cbar[i][k];
  return m;
}

Eigen::MatrixXd CouplingBlocks::Cmat_full() const {
  const int l = static_cast<int>(Cmat.size());
  const int n = l > 0 ? static_cast<int>(Cmat[0].size()) : static_cast<int>(Cbar.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(l, 3 * n);
  for (int k = 0; k < l; ++k)
    for (int i = 0; i < n; ++i) m.block<1, 3>(k, 3 * i) = Cmat[k][i];
  return m;
}

Eigen::MatrixXd CouplingBlocks::D_full() const {
  const int n = static_cast<int>(Cbar.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (int i = 0; i < n; ++i) m.block<3, 3>(3 * i, 3 * i) = D;
  return m;
}

std::vector<int> ValidatedModel::incident_lines(int i) const {
  std::vector<int> out;
  for (int l = 0; l < num_lines(); ++l)
    if (B(i, l) != 0.0) out.push_back(l);
  return out;
}

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

bool is_connected(int n, const std::vector<LineParams>& lines) {
  if (n <= 1) return true;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& l : lines) {
    if (l.from_dg < 0 || l.from_dg >= n || l.to_dg < 0 || l.to_dg >= n) continue;
    parent[find(l.from_dg)] = find(l.to_dg);
  }
  const int root = find(0);
  for (int i = 1; i < n; ++i)
    if (find(i) != root) return false;
  return true;
}

std::vector<Violation> find_violations(const MicrogridSpec& spec) {
  std::vector<Violation> v;
  const int n = static_cast<int>(spec.dgs.size());
  if (n == 0) v.push_back({"NonPositiveParameter", "dgs", "at least one DG is required"});
  for (int i = 0; i < n; ++i) {
    const auto& p = spec.dgs[i].params;
    const auto& ld = spec.dgs[i].load;
    const std::string base = "dgs[" + std::to_string(i) + "].";
    const std::pair<const char*, double> fields[] = {
        {"R_t", p.R_t}, {"L_t", p.L_t}, {"C_t", p.C_t}, {"V_r", p.V_r}};
    for (const auto& [name, val] : fields)
      if (!positive(val))
        v.push_back({"NonPositiveParameter", base + name, std::string(name) + " must be > 0"});
    if (!std::isfinite(ld.I_const))
      v.push_back({"NonPositiveParameter", base + "load.I_const", "I_const must be finite"});
    if (!(std::isfinite(ld.Y_L) && ld.Y_L >= 0.0))
      v.push_back({"NonPositiveParameter", base + "load.Y_L", "Y_L must be >= 0"});
    if (!(std::isfinite(ld.P_star) && ld.P_star >= 0.0))
      v.push_back({"NonPositiveParameter", base + "load.P_star", "P_star must be >= 0"});
  }
  for (std::size_t l = 0; l < spec.lines.size(); ++l) {
    const auto& ln = spec.lines[l];
    const std::string base = "lines[" + std::to_string(l) + "].";
    if (!positive(ln.R)) v.push_back({"NonPositiveParameter", base + "R", "R must be > 0"});
    if (!positive(ln.L)) v.push_back({"NonPositiveParameter", base + "L", "L must be > 0"});
    if (ln.from_dg < 0 || ln.from_dg >= n)
      v.push_back({"InvalidIndex", base + "from", "DG index out of range"});
    if (ln.to_dg < 0 || ln.to_dg >= n)
      v.push_back({"InvalidIndex", base + "to", "DG index out of range"});
    if (ln.from_dg == ln.to_dg)
      v.push_back({"DuplicateLineEndpoints", base + "to", "line endpoints must differ"});
  }
  if (n >= 2 && !is_connected(n, spec.lines))
    v.push_back({"DisconnectedGraph", "lines", "DG graph is not connected"});
  return v;
}

ValidatedModel validate(const MicrogridSpec& spec) {
  const auto v = find_violations(spec);
  if (!v.empty()) {
    ErrorKind kind = ErrorKind::NonPositiveParameter;
    if (v[0].kind == "DuplicateLineEndpoints") kind = ErrorKind::DuplicateLineEndpoints;
    if (v[0].kind == "InvalidIndex") kind = ErrorKind::InvalidIndex;
    if (v[0].kind == "DisconnectedGraph") kind = ErrorKind::DisconnectedGraph;
    throw Error(kind, v[0].field + ": " + v[0].message);
  }
  ValidatedModel m;
  m.spec = spec;
  m.B = incidence_matrix(spec.lines, static_cast<int>(spec.dgs.size()));
  return m;
}

IncidenceMatrix incidence_matrix(const std::vector<LineParams>& lines, int n) {
  IncidenceMatrix B = IncidenceMatrix::Zero(n, static_cast<int>(lines.size()));
  for (std::size_t l = 0; l < lines.size(); ++l) {
    B(lines[l].from_dg, int(l)) = 1.0;
    B(lines[l].to_dg, int(l)) = -1.0;
  }
  return B;
}

DGStateSpace dg_matrices(const DGParams& dg, const ZipLoad& load) {
  DGStateSpace s;
  s.A << -load.Y_L / dg.C_t, 1.0 / dg.C_t, 0.0,
         -1.0 / dg.L_t, -dg.R_t / dg.L_t, 0.0,
         -1.0, 0.0, 0.0;
  s.B << 0.0, 1.0 / dg.L_t, 0.0;
  s.H << 0.0, 0.0, 1.0;
  s.d << -load.I_const / dg.C_t, 0.0, dg.V_r;
  return s;
}

LineStateSpace line_matrices(const LineParams& line) {
  return {-line.R / line.L, 1.0 / line.L};
}

double cpl_voltage_floor(const DGParams& dg) { return 1e-3 * dg.V_r; }

double zip_current(const ZipLoad& load, double V, double V_min) {
  double i = load.I_const + load.Y_L * V;
  if (load.P_star > 0.0) {
    if (V < V_min || V <= 0.0)
      throw Error(ErrorKind::VoltageTooLowForCPL,
                  "voltage " + std::to_string(V) + " below constant-power floor");
    i += load.P_star / V;
  }
  return i;
}

CouplingBlocks coupling_blocks(const ValidatedModel& model) {
  const int n = model.num_dgs();
  const int L = model.num_lines();
  CouplingBlocks c;
  c.Cbar.assign(n, std::vector<Eigen::Vector3d>(L, Eigen::Vector3d::Zero()));
  c.Cmat.assign(L, std::vector<Eigen::RowVector3d>(n, Eigen::RowVector3d::Zero()));
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < L; ++l) {
      const double b = model.B(i, l);
      if (b == 0.0) continue;
      c.Cbar[i][l](0) = -b / model.spec.dgs[i].params.C_t;
      c.Cmat[l][i](0) = b / model.spec.lines[l].L;
    }
  c.D = Eigen::Vector3d(0.0, 0.0, 1.0).asDiagonal();
  return c;
}

}  // namespace mgc
