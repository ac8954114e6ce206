// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgc/errors.hpp"
#include "mgc/synthesis.hpp"

namespace mgc {

using Eigen::MatrixXd;

const char* to_string(ConditionMode m) {
  return m == ConditionMode::Rederived ? "rederived" : "literal";
}

const char* to_string(ScalingMode m) { return m == ScalingMode::Energy ? "energy" : "none"; }

SubsystemScaling make_scaling(const ValidatedModel& model, const SynthesisConfig& config) {
  SubsystemScaling s;
  for (const auto& dg : model.spec.dgs) {
    Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
    if (config.scaling == ScalingMode::Energy) {
      T(0, 0) = 1.0 / std::sqrt(dg.params.C_t);
      T(1, 1) = 1.0 / std::sqrt(dg.params.L_t);
      T(2, 2) = config.integrator_scale;
    }
    s.T.push_back(T);
  }
  for (const auto& ln : model.spec.lines)
    s.t.push_back(config.scaling == ScalingMode::Energy ? 1.0 / std::sqrt(ln.L) : 1.0);
  if (config.scaling == ScalingMode::Energy) {
    if (!(config.time_scale > 0.0))
      throw Error(ErrorKind::NonPositiveParameter, "time_scale must be positive");
    s.omega = config.time_scale;
  }
  return s;
}

CouplingBlocks scaled_coupling(const ValidatedModel& model, const SubsystemScaling& s) {
  CouplingBlocks c = coupling_blocks(model);
  for (int i = 0; i < model.num_dgs(); ++i)
    for (int l = 0; l < model.num_lines(); ++l) {
      c.Cbar[i][l] = s.T[i].inverse() * c.Cbar[i][l] * s.t[l] / s.omega;
      c.Cmat[l][i] = c.Cmat[l][i] * s.T[i] / (s.t[l] * s.omega);
    }
  return c;
}

LineRequirement line_requirement(const DGIndices& dg, double p, double p_bar, double cbar_il,
                                 double c_li, ConditionMode mode) {
  LineRequirement r;
  const double cb2 = cbar_il * cbar_il;
  const double c2 = c_li * c_li;
  if (mode == ConditionMode::Rederived) {
    const double r1 = -p * dg.nu * cb2 / p_bar;
    const double off = 0.5 * (p * cbar_il + p_bar * c_li);
    const double r2 = dg.rho_tilde / (p * p_bar) * off * off;
    r.rho_min = std::max(r1, r2);
    if (c2 > 0.0) r.nu_lo = -p * dg.rho / (p_bar * c2);
    r.nu_hi = 0.0;
  } else {
    const double r1 = p * dg.nu * cb2 / p_bar;
    const double off = 0.5 * (p * std::abs(cbar_il) - p_bar * std::abs(c_li));
    const double r2 = dg.rho_tilde / (p * p_bar) * off * off;
    r.rho_min = std::max(r1, r2);
    r.nu_hi = c2 > 0.0 ? -p * dg.rho / (p_bar * c2) : 0.0;
  }
  return r;
}

namespace {

constexpr double kIntervalTol = 1e-6;
constexpr double kDgNuFraction = 0.02;

bool empty_interval(double lo, double hi) {
  return hi - lo <= kIntervalTol * (1.0 + std::max(std::abs(lo), std::abs(hi)));
}

// Line intervals are tiny in energy coordinates, so only their relative width counts.
bool empty_relative(double lo, double hi) {
  return hi - lo <= kIntervalTol * std::max(std::abs(lo), std::abs(hi));
}

[[noreturn]] void infeasible(const std::string& what) {
  throw Error(ErrorKind::Infeasible, what, "index_feasibility");
}

std::vector<double> scalars_or_ones(const std::optional<std::vector<double>>& v, int n,
                                    const char* name) {
  if (!v) return std::vector<double>(n, 1.0);
  if (static_cast<int>(v->size()) != n)
    throw Error(ErrorKind::DimensionMismatch,
                std::string(name) + " has " + std::to_string(v->size()) + " entries, expected " +
                    std::to_string(n));
  for (double x : *v)
    if (!(x > 0.0) || !std::isfinite(x))
      throw Error(ErrorKind::NonPositiveParameter, std::string(name) + " entries must be > 0");
  return *v;
}

}  // namespace

IndexFeasibility index_feasibility(const ValidatedModel& model, const SynthesisConfig& config) {
  const int N = model.num_dgs();
  const int L = model.num_lines();
  IndexFeasibility out;
  PassivityBudget& b = out.budget;
  b.p = scalars_or_ones(config.p, N, "p");
  b.p_bar = scalars_or_ones(config.p_bar, L, "p_bar");
  b.gamma_bar = config.gamma_bar;
  b.c0 = config.c0;
  b.c_offdiag = config.c_offdiag;
  if (!(config.gamma_bar > 0.0)) infeasible("gamma_bar must be positive");

  for (int i = 0; i < N; ++i) {
    const double p = b.p[i];
    const std::string tag = "dg " + std::to_string(i) + ": ";
    if (empty_interval(0.0, config.gamma_bar)) infeasible(tag + "0 < gamma_i < gamma_bar is empty");
    DGIndices d;
    d.gamma_i = 0.5 * config.gamma_bar;
    if (empty_interval(-d.gamma_i / p, 0.0)) infeasible(tag + "-gamma_i/p < nu < 0 is empty");
    d.nu = -kDgNuFraction * d.gamma_i / p;
    const double ceiling = std::min(p, 4.0 * d.gamma_i / p);
    if (empty_interval(0.0, ceiling)) infeasible(tag + "0 < rho_tilde < min(p, 4 gamma_i/p) is empty");
    d.rho_tilde = config.rho_tilde_fraction * ceiling;
    d.rho = 1.0 / d.rho_tilde;
    b.dg.push_back(d);
  }

  const SubsystemScaling s = make_scaling(model, config);
  const CouplingBlocks c = scaled_coupling(model, s);
  for (int l = 0; l < L; ++l) {
    double rho_min = 0.0;
    double nu_lo = -std::numeric_limits<double>::infinity();
    double nu_hi = 0.0;
    for (int i = 0; i < N; ++i) {
      if (model.B(i, l) == 0.0) continue;
      const LineRequirement r =
          line_requirement(b.dg[i], b.p[i], b.p_bar[l], c.Cbar[i][l](0), c.Cmat[l][i](0), config.mode);
      rho_min = std::max(rho_min, r.rho_min);
      nu_lo = std::max(nu_lo, r.nu_lo);
      nu_hi = std::min(nu_hi, r.nu_hi);
    }
    const std::string tag = "line " + std::to_string(l) + ": ";
    LineIndices li;
    li.rho = rho_min > 0.0 ? config.line_rho_margin * rho_min : 1.0;
    if (std::isfinite(nu_lo)) {
      if (empty_relative(nu_lo, nu_hi)) infeasible(tag + "admissible nu_bar interval is empty");
      li.nu = nu_hi - config.line_nu_fraction * (nu_hi - nu_lo);
    } else {
      li.nu = nu_hi < 0.0 ? 2.0 * nu_hi : -1.0;
    }
    b.line.push_back(li);
  }
  out.discrepancies = discrepancy_log(model, b);
  return out;
}

std::vector<Discrepancy> discrepancy_log(const ValidatedModel& model, const PassivityBudget& b) {
  std::vector<Discrepancy> out;
  auto differs = [](double a, double c) { return std::abs(a - c) > 1e-12 * (1.0 + std::abs(c)); };
  for (int l = 0; l < model.num_lines(); ++l)
    for (int i = 0; i < model.num_dgs(); ++i) {
      const double B = model.B(i, l);
      if (B == 0.0) continue;
      const double cbar = -B / model.spec.dgs[i].params.C_t;
      const double c = B / model.spec.lines[l].L;
      const DGIndices& d = b.dg[i];
      const double p = b.p[i], pb = b.p_bar[l];

      const double e_lit = p * d.nu * cbar * cbar / pb;
      const double e_red = -p * d.nu * cbar * cbar / pb;
      if (differs(e_lit, e_red))
        out.push_back({"line_rho_vs_dg_nu", i, l, e_lit, e_red,
                       "printed lower bound on rho_bar has the sign of nu and is vacuous for nu < 0"});

      const double off_lit = 0.5 * (p * std::abs(cbar) - pb * std::abs(c));
      const double off_red = 0.5 * (p * cbar + pb * c);
      const double f_lit = d.rho_tilde / (p * pb) * off_lit * off_lit;
      const double f_red = d.rho_tilde / (p * pb) * off_red * off_red;
      if (differs(f_lit, f_red))
        out.push_back({"line_rho_vs_coupling", i, l, f_lit, f_red, "coupling bounds differ"});

      const double g = -p * d.rho / (pb * c * c);
      out.push_back({"line_nu_vs_dg_rho", i, l, g, g,
                     "printed form bounds nu_bar from above; the minor bounds it from below"});
    }
  return out;
}

std::vector<MinorCheck> necessary_minors(const PassivityBudget& b, const CouplingBlocks& scaled,
                                         double omega) {
  GlobalData d;
  d.w_gain = 1.0 / omega;
  d.dg = b.dg;
  d.line = b.line;
  d.Cbar = scaled.Cbar_full();
  d.C = scaled.Cmat_full();
  d.D = scaled.D_full();
  const int N = d.num_dgs();
  const int L = d.num_lines();
  Eigen::VectorXd Gamma(3 * N);
  for (int i = 0; i < N; ++i) Gamma.segment<3>(3 * i).setConstant(b.dg[i].gamma_i);
  const MatrixXd G = global_matrix(d, MatrixXd::Zero(3 * N, 3 * N), b.p, b.p_bar, Gamma);

  const int ou = 0, oub = 3 * N, oz = 3 * N + L, ox = 6 * N + L, oxb = 9 * N + L, ow = 9 * N + 2 * L;
  std::vector<MinorCheck> out;
  auto minor = [&](const std::string& name, int dg, int line, int a, int c) {
    Eigen::Matrix2d m;
    m << G(a, a), G(a, c), G(c, a), G(c, c);
    out.push_back({name, dg, line, lmi::min_eigenvalue(m)});
  };
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < 3; ++k) {
      minor("dg_nu_vs_gamma", i, -1, ou + 3 * i + k, ow + 3 * i + k);
      minor("dg_rho_vs_gamma", i, -1, ox + 3 * i + k, ow + 3 * i + k);
    }
    minor("dg_rho_vs_p", i, -1, oz + 3 * i + 2, ox + 3 * i + 2);
  }
  for (int l = 0; l < L; ++l)
    for (int i = 0; i < N; ++i) {
      if (d.Cbar(3 * i, l) == 0.0 && d.C(l, 3 * i) == 0.0) continue;
      minor("line_rho_vs_dg_nu", i, l, ou + 3 * i, oxb + l);
      minor("line_rho_vs_coupling", i, l, ox + 3 * i, oxb + l);
      minor("line_nu_vs_dg_rho", i, l, oub + l, ox + 3 * i);
    }
  return out;
}

}  // namespace mgc
