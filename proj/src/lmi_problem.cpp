// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "mgc/errors.hpp"
#include "mgc/lmi.hpp"

namespace mgc::lmi {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  constant_ += o.constant_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  constant_ -= o.constant_;
  for (const Term& t : o.terms_) terms_.push_back({t.var, -t.coef});
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  constant_ *= s;
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (Term& t : terms_) t.coef *= s;
  return *this;
}

LinExpr LinExpr::operator-() const {
  LinExpr r = *this;
  r *= -1.0;
  return r;
}

double LinExpr::evaluate(const std::vector<double>& x) const {
  double s = constant_;
  for (const Term& t : terms_) s += t.coef * x.at(t.var);
  return s;
}

void LinExpr::compact() {
  if (terms_.size() < 2) {
    if (terms_.size() == 1 && terms_[0].coef == 0.0) terms_.clear();
    return;
  }
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> out;
  for (const Term& t : terms_) {
    if (!out.empty() && out.back().var == t.var)
      out.back().coef += t.coef;
    else
      out.push_back(t);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const Term& t) { return t.coef == 0.0; }),
            out.end());
  terms_ = std::move(out);
}

bool LinExpr::equals(const LinExpr& o, double tol) const {
  LinExpr d = *this;
  d -= o;
  d.compact();
  if (std::abs(d.constant_) > tol) return false;
  for (const Term& t : d.terms_)
    if (std::abs(t.coef) > tol) return false;
  return true;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }

AffineMatrix AffineMatrix::constant(const Eigen::MatrixXd& m) {
  AffineMatrix r(int(m.rows()), int(m.cols()));
  for (int i = 0; i < r.rows_; ++i)
    for (int j = 0; j < r.cols_; ++j) r(i, j) = LinExpr(m(i, j));
  return r;
}

AffineMatrix AffineMatrix::scalar(const LinExpr& e) {
  AffineMatrix r(1, 1);
  r(0, 0) = e;
  return r;
}

AffineMatrix AffineMatrix::term(Var v, const Eigen::MatrixXd& coef) {
  AffineMatrix r(int(coef.rows()), int(coef.cols()));
  for (int i = 0; i < r.rows_; ++i)
    for (int j = 0; j < r.cols_; ++j) r(i, j) = LinExpr::term(v, coef(i, j));
  return r;
}

AffineMatrix AffineMatrix::block(int r, int c, int nr, int nc) const {
  AffineMatrix b(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) b(i, j) = (*this)(r + i, c + j);
  return b;
}

void AffineMatrix::set_block(int r, int c, const AffineMatrix& m) {
  if (r + m.rows_ > rows_ || c + m.cols_ > cols_)
    throw Error(ErrorKind::DimensionMismatch, "set_block out of range");
  for (int i = 0; i < m.rows_; ++i)
    for (int j = 0; j < m.cols_; ++j) (*this)(r + i, c + j) = m(i, j);
}

void AffineMatrix::add_block(int r, int c, const AffineMatrix& m) {
  if (r + m.rows_ > rows_ || c + m.cols_ > cols_)
    throw Error(ErrorKind::DimensionMismatch, "add_block out of range");
  for (int i = 0; i < m.rows_; ++i)
    for (int j = 0; j < m.cols_; ++j) (*this)(r + i, c + j) += m(i, j);
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_)
    throw Error(ErrorKind::DimensionMismatch, "affine matrix sum dimension mismatch");
  for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_)
    throw Error(ErrorKind::DimensionMismatch, "affine matrix difference dimension mismatch");
  for (std::size_t k = 0; k < e_.size(); ++k) e_[k] -= o.e_[k];
  return *this;
}

AffineMatrix& AffineMatrix::operator*=(double s) {
  for (LinExpr& e : e_) e *= s;
  return *this;
}

Eigen::MatrixXd AffineMatrix::evaluate(const std::vector<double>& x) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).evaluate(x);
  return m;
}

Eigen::MatrixXd AffineMatrix::constant_part() const {
  Eigen::MatrixXd m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).constant();
  return m;
}

bool AffineMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i)
    for (int j = i + 1; j < cols_; ++j)
      if (!(*this)(i, j).equals((*this)(j, i), tol)) return false;
  return true;
}

void AffineMatrix::compact() {
  for (LinExpr& e : e_) e.compact();
}

AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }
AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) { return a -= b; }
AffineMatrix operator*(double s, AffineMatrix a) { return a *= s; }

AffineMatrix operator*(const Eigen::MatrixXd& m, const AffineMatrix& a) {
  if (m.cols() != a.rows())
    throw Error(ErrorKind::DimensionMismatch, "matrix-affine product dimension mismatch");
  AffineMatrix r(int(m.rows()), a.cols());
  for (int i = 0; i < r.rows(); ++i)
    for (int k = 0; k < a.rows(); ++k) {
      const double s = m(i, k);
      if (s == 0.0) continue;
      for (int j = 0; j < r.cols(); ++j) r(i, j) += s * a(k, j);
    }
  r.compact();
  return r;
}

AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixXd& m) {
  if (a.cols() != m.rows())
    throw Error(ErrorKind::DimensionMismatch, "affine-matrix product dimension mismatch");
  AffineMatrix r(a.rows(), int(m.cols()));
  for (int k = 0; k < a.cols(); ++k)
    for (int j = 0; j < r.cols(); ++j) {
      const double s = m(k, j);
      if (s == 0.0) continue;
      for (int i = 0; i < r.rows(); ++i) r(i, j) += s * a(i, k);
    }
  r.compact();
  return r;
}

AffineMatrix symmetric_blocks(const std::vector<std::vector<AffineMatrix>>& grid,
                              const std::vector<int>& sizes) {
  std::vector<int> off(sizes.size() + 1, 0);
  for (std::size_t k = 0; k < sizes.size(); ++k) off[k + 1] = off[k] + sizes[k];
  AffineMatrix out(off.back(), off.back());
  for (std::size_t i = 0; i < sizes.size(); ++i)
    for (std::size_t j = i; j < sizes.size(); ++j) {
      const AffineMatrix& b = grid.at(i).at(j);
      if (b.rows() == 0 && b.cols() == 0) continue;
      if (b.rows() != sizes[i] || b.cols() != sizes[j])
        throw Error(ErrorKind::DimensionMismatch, "block grid dimension mismatch");
      out.set_block(off[i], off[j], b);
      if (i != j) out.set_block(off[j], off[i], b.transpose());
    }
  out.compact();
  return out;
}

Var SymmetricVar::operator()(int i, int j) const {
  if (i > j) std::swap(i, j);
  const int idx = i * n - i * (i - 1) / 2 + (j - i);
  return upper.at(std::size_t(idx));
}

AffineMatrix SymmetricVar::expr() const {
  AffineMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = LinExpr((*this)(i, j));
  return m;
}

Eigen::MatrixXd SymmetricVar::value(const std::vector<double>& x) const {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = x.at((*this)(i, j).id);
  return m;
}

Var SDPProblem::add_variable(std::string name, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw Error(ErrorKind::NonPositiveParameter, "variable scale must be positive: " + name);
  vars_.push_back({std::move(name), scale});
  return Var{vars_.size() - 1};
}

SymmetricVar SDPProblem::add_symmetric(const std::string& name, int n, double scale) {
  SymmetricVar s;
  s.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      s.upper.push_back(
          add_variable(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]", scale));
  return s;
}

void SDPProblem::check_expr(const LinExpr& e) const {
  for (const Term& t : e.terms())
    if (t.var >= vars_.size())
      throw Error(ErrorKind::UnknownEntry, "undeclared variable id " + std::to_string(t.var));
}

void SDPProblem::add_lmi(std::string name, AffineMatrix m, bool strict) {
  if (m.rows() != m.cols())
    throw Error(ErrorKind::DimensionMismatch, "LMI block not square: " + name);
  m.compact();
  double scale = 1.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      check_expr(m(i, j));
      scale = std::max(scale, std::abs(m(i, j).constant()));
      for (const Term& t : m(i, j).terms()) scale = std::max(scale, std::abs(t.coef));
    }
  if (!m.is_symmetric(1e-12 * scale))
    throw Error(ErrorKind::StructureViolation, "LMI block not symmetric: " + name);
  lmis_.push_back({std::move(name), std::move(m), strict});
}

void SDPProblem::add_linear(std::string name, LinExpr e, bool strict) {
  e.compact();
  check_expr(e);
  linear_.push_back({std::move(name), std::move(e), strict});
}

void SDPProblem::add_objective(const LinExpr& e) {
  check_expr(e);
  objective_ += e;
  objective_.compact();
}

std::vector<Var> SDPProblem::add_l1_epigraph(const std::vector<Var>& entries,
                                             const std::vector<double>& weights,
                                             const std::string& name) {
  if (entries.size() != weights.size())
    throw Error(ErrorKind::DimensionMismatch, "l1 epigraph: entries and weights differ in length");
  std::vector<Var> slacks;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].id >= vars_.size())
      throw Error(ErrorKind::UnknownEntry, "l1 epigraph references undeclared variable");
    const std::string tag = name + "[" + std::to_string(k) + "]";
    Var t = add_variable("t_" + tag, vars_[entries[k].id].scale);
    add_linear(tag + ".pos", LinExpr(t) - LinExpr(entries[k]), false);
    add_linear(tag + ".neg", LinExpr(t) + LinExpr(entries[k]), false);
    if (weights[k] != 0.0) add_objective(LinExpr::term(t, weights[k]));
    slacks.push_back(t);
  }
  return slacks;
}

namespace {

nlohmann::json expr_json(const LinExpr& e) {
  nlohmann::json terms = nlohmann::json::array();
  for (const Term& t : e.terms()) terms.push_back({t.var, t.coef});
  return {{"c", e.constant()}, {"terms", terms}};
}

}  // namespace

std::string SDPProblem::to_json() const {
  nlohmann::json j;
  j["format"] = "mgc-sdp/1";
  j["margin"] = margin_;
  j["box_radius"] = box_radius_;
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : vars_) vars.push_back({{"name", v.name}, {"scale", v.scale}});
  j["variables"] = vars;
  nlohmann::json lmis = nlohmann::json::array();
  for (const auto& c : lmis_) {
    nlohmann::json entries = nlohmann::json::array();
    for (int r = 0; r < c.matrix.rows(); ++r)
      for (int col = r; col < c.matrix.cols(); ++col) {
        const LinExpr& e = c.matrix(r, col);
        if (e.constant() == 0.0 && e.terms().empty()) continue;
        entries.push_back({{"i", r}, {"j", col}, {"expr", expr_json(e)}});
      }
    lmis.push_back({{"name", c.name}, {"dim", c.matrix.rows()}, {"strict", c.strict},
                    {"upper", entries}});
  }
  j["lmis"] = lmis;
  nlohmann::json lin = nlohmann::json::array();
  for (const auto& c : linear_)
    lin.push_back({{"name", c.name}, {"strict", c.strict}, {"expr", expr_json(c.expr)}});
  j["linear"] = lin;
  j["objective"] = expr_json(objective_);
  return j.dump(2);
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

ResidualReport residual_check(const SDPProblem& problem, const std::vector<double>& x) {
  if (x.size() < problem.num_variables())
    throw Error(ErrorKind::DimensionMismatch, "assignment does not cover all variables");
  ResidualReport r;
  r.worst = std::numeric_limits<double>::infinity();
  for (const auto& c : problem.lmis()) {
    const double v = min_eigenvalue(c.matrix.evaluate(x));
    r.lmis.push_back({c.name, v});
    r.worst = std::min(r.worst, v);
  }
  for (const auto& c : problem.linear()) {
    const double v = c.expr.evaluate(x);
    r.linear.push_back({c.name, v});
    r.worst = std::min(r.worst, v);
  }
  if (r.empty()) r.worst = 0.0;
  return r;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Failure: return "Failure";
  }
  return "?";
}

}  // namespace mgc::lmi
