// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <exception>
#include <sstream>

#include "mgc/errors.hpp"
#include "mgc/synthesis.hpp"

namespace mgc {

using Eigen::MatrixXd;

Eigen::RowVector3d ControllerSet::k(int i, int j, const ValidatedModel& model) const {
  return model.spec.dgs.at(i).params.L_t * K.block(3 * i, 3 * j, 3, 3).row(1);
}

namespace {

GlobalData make_global_data(const std::vector<DGLocalResult>& dgs,
                            const std::vector<LineLocalResult>& lines, const CouplingBlocks& c,
                            double omega) {
  GlobalData d;
  d.w_gain = 1.0 / omega;
  for (const auto& r : dgs) d.dg.push_back(r.indices);
  for (const auto& r : lines) d.line.push_back(r.indices);
  d.Cbar = c.Cbar_full();
  d.C = c.Cmat_full();
  d.D = c.D_full();
  return d;
}

// Diagonal-dominance floor on rho_bar from the coupling of every adjacent DG input.
double coupling_floor(const ValidatedModel& model, const CouplingBlocks& c,
                      const std::vector<DGLocalResult>& dgs, const std::vector<double>& p,
                      double p_bar, int l) {
  double floor = 0.0;
  for (int i = 0; i < model.num_dgs(); ++i) {
    if (model.B(i, l) == 0.0) continue;
    double row = 0.0;
    for (int k : model.incident_lines(i)) row += std::abs(c.Cbar[i][k](0));
    floor += p[i] * std::abs(dgs[i].indices.nu) * std::abs(c.Cbar[i][l](0)) * row / p_bar;
  }
  return floor;
}

SynthesisConfig attempt_config(const ValidatedModel& model, const SynthesisConfig& base,
                               int attempt) {
  SynthesisConfig cfg = base;
  std::vector<double> p = base.p.value_or(std::vector<double>(model.num_dgs(), 1.0));
  std::vector<double> pb = base.p_bar.value_or(std::vector<double>(model.num_lines(), 1.0));
  static const double factors[4][2] = {{0.5, 1.0}, {2.0, 1.0}, {1.0, 0.5}, {1.0, 2.0}};
  if (attempt > 0) {
    const double* f = factors[(attempt - 1) % 4];
    for (double& x : p) x *= f[0];
    for (double& x : pb) x *= f[1];
  }
  cfg.p = p;
  cfg.p_bar = pb;
  return cfg;
}

template <typename Result, typename Fn>
std::vector<Result> run_parallel(int n, bool parallel, Fn&& fn) {
  std::vector<Result> out(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k = 0; k < n; ++k) {
    try {
      out[k] = fn(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

ControllerSet co_design(const ValidatedModel& model, const SynthesisConfig& config,
                        const LocalReuse& reuse, const lmi::SolverOptions& options) {
  const int N = model.num_dgs();
  const int L = model.num_lines();
  // Local solves run concurrently, so each one is serial inside.
  lmi::SolverOptions local = options;
  local.parallel = false;
  std::string last_failure;

  for (int attempt = 0; attempt <= std::max(0, config.retries); ++attempt) {
    const SynthesisConfig cfg = attempt_config(model, config, attempt);
    IndexFeasibility feas = index_feasibility(model, cfg);
    const SubsystemScaling s = make_scaling(model, cfg);
    const CouplingBlocks c = scaled_coupling(model, s);
    const std::vector<double>& p = feas.budget.p;
    const std::vector<double>& pb = feas.budget.p_bar;

    const auto dgs = run_parallel<DGLocalResult>(N, options.parallel, [&](int i) {
      if (i < static_cast<int>(reuse.dgs.size()) && reuse.dgs[i]) return *reuse.dgs[i];
      return synth_dg_local(model.spec.dgs[i], s.T[i], s.omega, p[i], cfg, local);
    });
    const auto lines = run_parallel<LineLocalResult>(L, options.parallel, [&](int l) {
      if (l < static_cast<int>(reuse.lines.size()) && reuse.lines[l]) return *reuse.lines[l];
      std::vector<LineRequirement> reqs;
      for (int i = 0; i < N; ++i)
        if (model.B(i, l) != 0.0)
          reqs.push_back(line_requirement(dgs[i].indices, p[i], pb[l], c.Cbar[i][l](0),
                                          c.Cmat[l][i](0), cfg.mode));
      return synth_line_local(model.spec.lines[l], s.t[l], s.omega, pb[l], reqs,
                              coupling_floor(model, c, dgs, p, pb[l], l), cfg, local);
    });

    const GlobalData d = make_global_data(dgs, lines, c, s.omega);
    const GlobalResult g = synth_global(d, cfg, options);
    if (!g.feasible()) {
      last_failure = g.diagnostics;
      continue;
    }

    ControllerSet out;
    out.dgs = dgs;
    out.lines = lines;
    out.Khat = g.Khat;
    out.K = MatrixXd::Zero(3 * N, 3 * N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        out.K.block(3 * i, 3 * j, 3, 3) =
            s.T[i] * g.Khat.block(3 * i, 3 * j, 3, 3) * s.T[j].inverse();
    out.topology = extract_topology(g.Khat, cfg.prune_threshold);
    out.budget = feas.budget;
    for (int i = 0; i < N; ++i) out.budget.dg[i] = dgs[i].indices;
    for (int l = 0; l < L; ++l) out.budget.line[l] = lines[l].indices;
    out.budget.p = g.p;
    out.budget.p_bar = g.p_bar;
    out.budget.gamma_tilde = g.gamma_tilde;
    out.scaling = s;
    out.gamma_tilde = g.gamma_tilde;
    out.global_residual = g.residual;
    out.global_objective = g.objective;
    out.attempts = attempt + 1;
    out.discrepancies = std::move(feas.discrepancies);
    for (const auto& r : dgs) out.diagnostics.push_back(r.diagnostics);
    for (const auto& r : lines) out.diagnostics.push_back(r.diagnostics);
    out.diagnostics.push_back(g.diagnostics);
    return out;
  }
  throw Error(ErrorKind::Infeasible, "global co-design LMI infeasible: " + last_failure, "global");
}

GlobalData global_data(const ValidatedModel& model, const ControllerSet& c) {
  return make_global_data(c.dgs, c.lines, scaled_coupling(model, c.scaling), c.scaling.omega);
}

MatrixXd closed_loop_matrix(const ValidatedModel& model, const ControllerSet& c) {
  const int N = model.num_dgs();
  const int L = model.num_lines();
  const CouplingBlocks cb = coupling_blocks(model);
  MatrixXd A = MatrixXd::Zero(3 * N + L, 3 * N + L);
  for (int i = 0; i < N; ++i) {
    const DGStateSpace ss = dg_matrices(model.spec.dgs[i].params, model.spec.dgs[i].load);
    A.block(3 * i, 3 * i, 3, 3) = ss.A + ss.B * c.dgs[i].K_io;
    for (int l = 0; l < L; ++l) {
      A.block(3 * i, 3 * N + l, 3, 1) = cb.Cbar[i][l];
      A.block(3 * N + l, 3 * i, 1, 3) = cb.Cmat[l][i];
    }
  }
  if (c.K.size() > 0) A.topLeftCorner(3 * N, 3 * N) += c.K;
  for (int l = 0; l < L; ++l) {
    const LineStateSpace ls = line_matrices(model.spec.lines[l]);
    A(3 * N + l, 3 * N + l) = ls.A + ls.B * c.lines[l].K_lo;
  }
  return A;
}

}  // namespace mgc
