// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <functional>

#include "mgc/errors.hpp"
#include "mgc/lmi.hpp"
#include "mgc/lmi_kernels.hpp"

namespace mgc::lmi {

SolverOptions SolverOptions::from_env() {
  SolverOptions o;
  if (const char* s = std::getenv("MG_SOLVER_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end != s && v > 0.0 && std::isfinite(v)) o.tolerance = v;
  }
  return o;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LpRow {
  std::vector<std::pair<int, double>> a;
  double b = 0.0;
};

// Dual-form conic program: min c'y s.t. F0 + sum y_i F_i >= 0 per block, a'y + b >= 0 per row.
struct Conic {
  int m = 0;
  VectorXd c;
  std::vector<DenseBlock> blocks;
  std::vector<LpRow> rows;
};

struct IpmResult {
  bool converged = false;
  VectorXd y;
  std::vector<MatrixXd> X;
  VectorXd x;
  VectorXd rp;
  double pobj = 0.0;
  double dobj = 0.0;
  double gap = 0.0;
  double pinf = 0.0;
  double dinf = 0.0;
  int iterations = 0;
  std::string message;
};

MatrixXd evaluate_block(const DenseBlock& b, const VectorXd& y) {
  MatrixXd z = b.F0;
  for (std::size_t i = 0; i < b.F.size(); ++i) {
    const SparseSym& f = b.F[i];
    for (std::size_t k = 0; k < f.nnz(); ++k) z(f.row[k], f.col[k]) += y(int(i)) * f.val[k];
  }
  return z;
}

double row_value(const LpRow& r, const VectorXd& y) {
  double v = r.b;
  for (const auto& [i, a] : r.a) v += a * y(i);
  return v;
}

double max_step_psd(const MatrixXd& X, const MatrixXd& dX) {
  Eigen::LLT<MatrixXd> llt(X);
  MatrixXd L = llt.matrixL();
  MatrixXd W = L.triangularView<Eigen::Lower>().solve(dX);
  W = L.triangularView<Eigen::Lower>().solve(W.transpose()).transpose();
  W = 0.5 * (W + W.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Stops early when the callback accepts the current dual point.
using EarlyStop = std::function<bool(const VectorXd& y)>;

IpmResult run_ipm(const Conic& P, double tol, int max_iter, bool parallel,
                  const EarlyStop& early_stop = nullptr) {
  const int m = P.m;
  const int nb = static_cast<int>(P.blocks.size());
  const int nr = static_cast<int>(P.rows.size());

  int nu = nr;
  int nmax = 1;
  for (const auto& b : P.blocks) {
    nu += b.n;
    nmax = std::max(nmax, b.n);
  }
  const double init = std::max(10.0, std::sqrt(double(nmax)));

  std::vector<MatrixXd> X(nb), Z(nb);
  for (int k = 0; k < nb; ++k) {
    X[k] = init * MatrixXd::Identity(P.blocks[k].n, P.blocks[k].n);
    Z[k] = X[k];
  }
  VectorXd x = VectorXd::Constant(nr, init);
  VectorXd z = VectorXd::Constant(nr, init);
  VectorXd y = VectorXd::Zero(m);

  double normF0 = 0.0;
  for (const auto& b : P.blocks) normF0 += b.F0.squaredNorm();
  for (const auto& r : P.rows) normF0 += r.b * r.b;
  normF0 = std::sqrt(normF0);
  const double normc = P.c.norm();

  IpmResult res;
  IpmResult best;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<MatrixXd> Rd(nb), Zinv(nb);
  VectorXd rd(nr);

  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    // residuals
    double rd_norm2 = 0.0;
    for (int k = 0; k < nb; ++k) {
      Rd[k] = evaluate_block(P.blocks[k], y) - Z[k];
      rd_norm2 += Rd[k].squaredNorm();
    }
    for (int j = 0; j < nr; ++j) {
      rd(j) = row_value(P.rows[j], y) - z(j);
      rd_norm2 += rd(j) * rd(j);
    }
    VectorXd Ax = VectorXd::Zero(m);
    for (int k = 0; k < nb; ++k)
      for (int i = 0; i < m; ++i) Ax(i) += P.blocks[k].F[i].trace_product(X[k]);
    for (int j = 0; j < nr; ++j)
      for (const auto& [i, a] : P.rows[j].a) Ax(i) += a * x(j);
    VectorXd rp = P.c - Ax;

    double xz = x.dot(z);
    double pobj = 0.0;
    for (int k = 0; k < nb; ++k) {
      xz += (X[k].cwiseProduct(Z[k])).sum();
      pobj -= (P.blocks[k].F0.cwiseProduct(X[k])).sum();
    }
    for (int j = 0; j < nr; ++j) pobj -= P.rows[j].b * x(j);
    const double dobj = P.c.dot(y);
    const double mu = xz / nu;

    res.pobj = pobj;
    res.dobj = dobj;
    res.gap = std::abs(dobj - pobj) / (1.0 + std::abs(dobj) + std::abs(pobj));
    res.pinf = rp.norm() / (1.0 + normc);
    res.dinf = std::sqrt(rd_norm2) / (1.0 + normF0);
    res.rp = rp;
    const double merit = std::max({res.gap, res.pinf, res.dinf});
    if (merit < best_merit) {
      if (merit < 0.5 * best_merit) since_best = 0;
      best_merit = merit;
      best = res;
      best.y = y;
      best.X = X;
      best.x = x;
    } else {
      ++since_best;
    }
    if (merit < tol) {
      best.converged = true;
      break;
    }
    if (early_stop && res.dinf < tol && early_stop(y)) {
      best = res;
      best.y = y;
      best.X = X;
      best.x = x;
      best.message = "early stop";
      break;
    }
    if (since_best > 15 || mu < 1e-16) {
      res.message = "stalled";
      break;
    }
    if (!std::isfinite(mu) || mu > 1e30) {
      res.message = "iterates diverged";
      break;
    }

    // Schur complement
    MatrixXd M = MatrixXd::Zero(m, m);
    bool lost = false;
    for (int k = 0; k < nb && !lost; ++k) {
      Eigen::LLT<MatrixXd> llt(Z[k]);
      if (llt.info() != Eigen::Success) {
        lost = true;
        continue;
      }
      Zinv[k] = llt.solve(MatrixXd::Identity(P.blocks[k].n, P.blocks[k].n));
      Zinv[k] = sym(Zinv[k]);
      if (parallel)
        schur_block_parallel(P.blocks[k], X[k], Zinv[k], M);
      else
        schur_block_serial(P.blocks[k], X[k], Zinv[k], M);
    }
    if (lost) {
      res.message = "lost positive definiteness of Z";
      break;
    }
    for (int j = 0; j < nr; ++j) {
      const double w = x(j) / z(j);
      for (const auto& [i1, a1] : P.rows[j].a)
        for (const auto& [i2, a2] : P.rows[j].a) M(i1, i2) += w * a1 * a2;
    }
    M = sym(M);
    Eigen::LLT<MatrixXd> Mfac(M);
    Eigen::LDLT<MatrixXd> Mldlt;
    const bool use_llt = Mfac.info() == Eigen::Success;
    if (!use_llt) Mldlt.compute(M);

    VectorXd g = VectorXd::Zero(m), h = VectorXd::Zero(m);
    std::vector<MatrixXd> XRdZi(nb);
    for (int k = 0; k < nb; ++k) {
      XRdZi[k] = X[k] * Rd[k] * Zinv[k];
      for (int i = 0; i < m; ++i) {
        g(i) += P.blocks[k].F[i].trace_product(Zinv[k]);
        h(i) += P.blocks[k].F[i].trace_product(XRdZi[k]);
      }
    }
    for (int j = 0; j < nr; ++j)
      for (const auto& [i, a] : P.rows[j].a) {
        g(i) += a / z(j);
        h(i) += a * x(j) * rd(j) / z(j);
      }

    struct Dir {
      VectorXd dy, dx, dz;
      std::vector<MatrixXd> dX, dZ;
    };
    auto direction = [&](double target, const Dir* corr) {
      Dir d;
      VectorXd rhs = target * g - h - P.c;
      std::vector<MatrixXd> cz(nb);
      VectorXd cl;
      if (corr) {
        for (int k = 0; k < nb; ++k) {
          cz[k] = corr->dX[k] * corr->dZ[k] * Zinv[k];
          for (int i = 0; i < m; ++i) rhs(i) -= P.blocks[k].F[i].trace_product(cz[k]);
        }
        cl = corr->dx.cwiseProduct(corr->dz).cwiseQuotient(z);
        for (int j = 0; j < nr; ++j)
          for (const auto& [i, a] : P.rows[j].a) rhs(i) -= a * cl(j);
      }
      d.dy = use_llt ? VectorXd(Mfac.solve(rhs)) : VectorXd(Mldlt.solve(rhs));
      d.dX.resize(nb);
      d.dZ.resize(nb);
      for (int k = 0; k < nb; ++k) {
        d.dZ[k] = evaluate_block(P.blocks[k], d.dy) - P.blocks[k].F0 + Rd[k];
        MatrixXd t = target * Zinv[k] - X[k] - X[k] * d.dZ[k] * Zinv[k];
        if (corr) t -= cz[k];
        d.dX[k] = sym(t);
      }
      d.dz.resize(nr);
      d.dx.resize(nr);
      for (int j = 0; j < nr; ++j) {
        double v = rd(j);
        for (const auto& [i, a] : P.rows[j].a) v += a * d.dy(i);
        d.dz(j) = v;
        d.dx(j) = target / z(j) - x(j) - x(j) * v / z(j) - (corr ? cl(j) : 0.0);
      }
      return d;
    };
    auto steps = [&](const Dir& d, double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = ap;
      for (int k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step_psd(X[k], d.dX[k]));
        ad = std::min(ad, max_step_psd(Z[k], d.dZ[k]));
      }
      for (int j = 0; j < nr; ++j) {
        if (d.dx(j) < 0) ap = std::min(ap, -x(j) / d.dx(j));
        if (d.dz(j) < 0) ad = std::min(ad, -z(j) / d.dz(j));
      }
    };

    Dir pred = direction(0.0, nullptr);
    double ap, ad;
    steps(pred, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double xz_aff = (x + ap * pred.dx).dot(z + ad * pred.dz);
    for (int k = 0; k < nb; ++k)
      xz_aff += ((X[k] + ap * pred.dX[k]).cwiseProduct(Z[k] + ad * pred.dZ[k])).sum();
    const double mu_aff = xz_aff / nu;
    double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    Dir corr = direction(sigma * mu, &pred);
    steps(corr, ap, ad);
    const double gamma = 0.95;
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (!std::isfinite(ap) || !std::isfinite(ad) || (ap < 1e-12 && ad < 1e-12)) {
      res.message = "step length collapsed";
      break;
    }
    for (int k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * corr.dX[k]);
      Z[k] = sym(Z[k] + ad * corr.dZ[k]);
    }
    x += ap * corr.dx;
    z += ad * corr.dz;
    y += ad * corr.dy;
    res.iterations = it + 1;
  }
  if (best.y.size() == 0) {
    best = res;
    best.y = y;
    best.X = X;
    best.x = x;
  }
  best.iterations = res.iterations;
  if (!best.converged && best.message.empty())
    best.message = res.message.empty() ? "iteration limit reached" : res.message;
  return best;
}

// Scaled data shared by both phases.
struct Prepared {
  Conic conic;            // constraints and objective in scaled variables
  std::vector<double> s;  // variable scales, y = s .* yhat
  std::vector<double> block_margin;
  std::vector<double> row_margin;
  int constraint_rows = 0;  // rows before the box rows
  double objective_scale = 1.0;
  bool trivially_infeasible = false;
  std::string trivial_reason;
};

void ruiz(DenseBlock& b) {
  const int n = b.n;
  for (int pass = 0; pass < 12; ++pass) {
    VectorXd rn = VectorXd::Zero(n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) rn(r) = std::max(rn(r), std::abs(b.F0(r, c)));
    for (const auto& f : b.F)
      for (std::size_t k = 0; k < f.nnz(); ++k)
        rn(f.row[k]) = std::max(rn(f.row[k]), std::abs(f.val[k]));
    bool done = true;
    VectorXd step = VectorXd::Ones(n);
    for (int r = 0; r < n; ++r)
      if (rn(r) > 0) {
        step(r) = 1.0 / std::sqrt(rn(r));
        if (std::abs(rn(r) - 1.0) > 1e-3) done = false;
      }
    b.F0 = step.asDiagonal() * b.F0 * step.asDiagonal();
    for (auto& f : b.F)
      for (std::size_t k = 0; k < f.nnz(); ++k) f.val[k] *= step(f.row[k]) * step(f.col[k]);
    if (done) break;
  }
}

Prepared prepare(const SDPProblem& prob) {
  Prepared p;
  const int m = static_cast<int>(prob.num_variables());
  p.conic.m = m;
  p.s.resize(m);
  for (int i = 0; i < m; ++i) p.s[i] = prob.variables()[i].scale;
  const double eps = prob.margin();

  for (const auto& c : prob.lmis()) {
    DenseBlock b;
    b.n = c.matrix.rows();
    b.F0 = c.matrix.constant_part();
    b.F.resize(m);
    for (int r = 0; r < b.n; ++r)
      for (int col = r; col < b.n; ++col)
        for (const Term& t : c.matrix(r, col).terms())
          b.F[t.var].push(r, col, t.coef * p.s[t.var]);
    ruiz(b);
    double margin = 0.0;
    if (c.strict) {
      margin = eps * (1.0 + b.F0.norm());
      b.F0.diagonal().array() -= margin;
    }
    p.block_margin.push_back(margin);
    p.conic.blocks.push_back(std::move(b));
  }
  for (const auto& c : prob.linear()) {
    LpRow r;
    r.b = c.expr.constant();
    double nrm = std::abs(r.b);
    for (const Term& t : c.expr.terms()) {
      r.a.push_back({int(t.var), t.coef * p.s[t.var]});
      nrm = std::max(nrm, std::abs(t.coef * p.s[t.var]));
    }
    double amax = 0.0;
    for (const auto& [i, a] : r.a) amax = std::max(amax, std::abs(a));
    if (amax == 0.0) {
      if (r.b < 0.0 || (c.strict && r.b <= 0.0)) {
        p.trivially_infeasible = true;
        p.trivial_reason = "constant constraint violated: " + c.name;
      }
      p.row_margin.push_back(0.0);
      r.a.clear();
      r.b = 1.0;
      p.conic.rows.push_back(r);
      continue;
    }
    for (auto& e : r.a) e.second /= nrm;
    r.b /= nrm;
    double margin = 0.0;
    if (c.strict) {
      margin = eps * (1.0 + std::abs(r.b));
      r.b -= margin;
    }
    p.row_margin.push_back(margin);
    p.conic.rows.push_back(std::move(r));
  }
  p.constraint_rows = static_cast<int>(p.conic.rows.size());
  const double R = prob.box_radius();
  for (int i = 0; i < m; ++i) {
    p.conic.rows.push_back({{{i, 1.0 / R}}, 1.0});
    p.conic.rows.push_back({{{i, -1.0 / R}}, 1.0});
  }
  p.conic.c = VectorXd::Zero(m);
  for (const Term& t : prob.objective().terms()) p.conic.c(int(t.var)) += t.coef * p.s[t.var];
  const double cmax = p.conic.c.cwiseAbs().maxCoeff();
  if (m > 0 && cmax > 0) {
    p.objective_scale = cmax;
    p.conic.c /= cmax;
  }
  return p;
}

// Smallest margin-free slack of the scaled constraints at yhat, relative to each margin.
bool point_feasible(const Prepared& p, const VectorXd& yhat, double eps, double& worst) {
  const double slack = 0.1 * eps;
  worst = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t k = 0; k < p.conic.blocks.size(); ++k) {
    const double lmin = min_eigenvalue(evaluate_block(p.conic.blocks[k], yhat)) + p.block_margin[k];
    worst = std::min(worst, lmin);
    const double need = p.block_margin[k] > 0 ? 0.5 * p.block_margin[k] : -slack;
    if (lmin < need) ok = false;
  }
  for (int j = 0; j < p.constraint_rows; ++j) {
    if (p.conic.rows[j].a.empty()) continue;
    const double v = row_value(p.conic.rows[j], yhat) + p.row_margin[j];
    worst = std::min(worst, v);
    const double need = p.row_margin[j] > 0 ? 0.5 * p.row_margin[j] : -slack;
    if (v < need) ok = false;
  }
  return ok;
}

}  // namespace

SDPSolution solve(const SDPProblem& problem, const SolverOptions& options) {
  SDPSolution sol;
  const int m = static_cast<int>(problem.num_variables());
  sol.values.assign(m, 0.0);
  if (problem.lmis().empty() && problem.linear().empty() && !problem.has_objective()) {
    sol.status = SolveStatus::Feasible;
    return sol;
  }
  Prepared prep = prepare(problem);
  if (prep.trivially_infeasible) {
    sol.status = SolveStatus::Infeasible;
    sol.diagnostics = prep.trivial_reason;
    return sol;
  }
  const double tol = options.tolerance;
  std::ostringstream diag;

  // Phase 1: maximize t with every constraint shifted by t, capped at 1.
  Conic p1 = prep.conic;
  p1.m = m + 1;
  p1.c = VectorXd::Zero(m + 1);
  p1.c(m) = -1.0;
  for (auto& b : p1.blocks) {
    SparseSym ft;
    for (int r = 0; r < b.n; ++r) ft.push(r, r, -1.0);
    b.F.push_back(ft);
  }
  for (int j = 0; j < prep.constraint_rows; ++j)
    if (!p1.rows[j].a.empty()) p1.rows[j].a.push_back({m, -1.0});
  p1.rows.push_back({{{m, -1.0}}, 1.0});

  const EarlyStop strictly_feasible = [&](const VectorXd& y) {
    double w = 0.0;
    return y(m) > 0.0 && point_feasible(prep, y.head(m), problem.margin(), w);
  };
  IpmResult r1 = run_ipm(p1, tol, options.max_iterations, options.parallel, strictly_feasible);
  sol.iterations = r1.iterations;
  VectorXd yhat = r1.y.head(m);
  const double tstar = r1.y(m);
  double worst = 0.0;
  const bool feas1 = point_feasible(prep, yhat, problem.margin(), worst);
  diag << "phase1: iters=" << r1.iterations << " t=" << tstar << " gap=" << r1.gap
       << " pinf=" << r1.pinf << " dinf=" << r1.dinf;
  if (!r1.message.empty()) diag << " (" << r1.message << ")";

  if (!feas1) {
    // Upper bound on the best achievable shift implied by the primal iterate.
    const double R = problem.box_radius();
    double bound = -r1.pobj + std::abs(r1.rp(m));
    for (int i = 0; i < m; ++i) bound += R * std::abs(r1.rp(i));
    diag << " certificate_bound=" << bound;
    sol.diagnostics = diag.str();
    if (bound < -0.1 * problem.margin()) {
      sol.status = SolveStatus::Infeasible;
    } else {
      sol.status = SolveStatus::Failure;
    }
    return sol;
  }

  if (problem.has_objective()) {
    IpmResult r2 = run_ipm(prep.conic, tol, options.max_iterations, options.parallel);
    sol.iterations += r2.iterations;
    diag << "; phase2: iters=" << r2.iterations << " gap=" << r2.gap << " pinf=" << r2.pinf
         << " dinf=" << r2.dinf;
    if (!r2.message.empty()) diag << " (" << r2.message << ")";
    double w2 = 0.0;
    const bool feas2 = point_feasible(prep, r2.y, problem.margin(), w2);
    const bool accurate = r2.converged || (r2.gap < 1e3 * tol && r2.dinf < 1e3 * tol);
    if (feas2 && accurate) {
      yhat = r2.y;
      sol.status = SolveStatus::Optimal;
      if (!r2.converged) diag << " reduced accuracy";
    } else {
      // The phase-1 point remains a valid, non-optimized answer.
      sol.status = SolveStatus::Feasible;
      diag << (feas2 ? " not converged" : " final point infeasible")
           << "; returning phase-1 point";
    }
  } else {
    sol.status = SolveStatus::Feasible;
  }
  for (int i = 0; i < m; ++i) sol.values[i] = prep.s[i] * yhat(i);
  sol.objective = problem.objective().evaluate(sol.values);
  sol.worst_residual = residual_check(problem, sol.values).worst;
  sol.diagnostics = diag.str();
  return sol;
}

}  // namespace mgc::lmi
