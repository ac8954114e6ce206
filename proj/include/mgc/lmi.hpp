// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace mgc::lmi {

struct Var {
  std::size_t id = 0;
};

struct Term {
  std::size_t var;
  double coef;
};

// Scalar affine expression c0 + sum coef * var.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double c) : constant_(c) {}
  LinExpr(Var v) : terms_{{v.id, 1.0}} {}

  static LinExpr term(Var v, double coef) {
    LinExpr e;
    if (coef != 0.0) e.terms_.push_back({v.id, coef});
    return e;
  }

  double constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
  LinExpr operator-() const;

  double evaluate(const std::vector<double>& x) const;
  // Merges repeated variables and drops exact zeros.
  void compact();
  bool equals(const LinExpr& o, double tol) const;

 private:
  double constant_ = 0.0;
  std::vector<Term> terms_;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);
LinExpr operator*(LinExpr a, double s);

// Dense matrix of affine expressions.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(int rows, int cols) : rows_(rows), cols_(cols), e_(std::size_t(rows) * cols) {}

  static AffineMatrix constant(const Eigen::MatrixXd& m);
  static AffineMatrix scalar(const LinExpr& e);
  // Matrix with `coef(i, j) * v` in each entry.
  static AffineMatrix term(Var v, const Eigen::MatrixXd& coef);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  LinExpr& operator()(int r, int c) { return e_[std::size_t(r) * cols_ + c]; }
  const LinExpr& operator()(int r, int c) const { return e_[std::size_t(r) * cols_ + c]; }

  AffineMatrix block(int r, int c, int nr, int nc) const;
  void set_block(int r, int c, const AffineMatrix& m);
  void add_block(int r, int c, const AffineMatrix& m);
  AffineMatrix transpose() const;

  AffineMatrix& operator+=(const AffineMatrix& o);
  AffineMatrix& operator-=(const AffineMatrix& o);
  AffineMatrix& operator*=(double s);

  Eigen::MatrixXd evaluate(const std::vector<double>& x) const;
  Eigen::MatrixXd constant_part() const;
  bool is_symmetric(double tol = 0.0) const;
  void compact();

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<LinExpr> e_;
};

AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b);
AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b);
AffineMatrix operator*(double s, AffineMatrix a);
AffineMatrix operator*(const Eigen::MatrixXd& m, const AffineMatrix& a);
AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixXd& m);
// Symmetric block matrix from a row-major grid of blocks; lower blocks may be
// left empty (0x0) and are filled by transposition.
AffineMatrix symmetric_blocks(const std::vector<std::vector<AffineMatrix>>& grid,
                              const std::vector<int>& sizes);

struct SymmetricVar {
  int n = 0;
  std::vector<Var> upper;  // row-major upper triangle

  Var operator()(int i, int j) const;
  AffineMatrix expr() const;
  Eigen::MatrixXd value(const std::vector<double>& x) const;
};

struct LmiConstraint {
  std::string name;
  AffineMatrix matrix;
  bool strict = true;
};

struct LinearConstraint {
  std::string name;
  LinExpr expr;  // expr >= 0, or > 0 when strict
  bool strict = true;
};

struct VariableInfo {
  std::string name;
  double scale = 1.0;  // typical magnitude used for conditioning
};

class SDPProblem {
 public:
  Var add_variable(std::string name, double scale = 1.0);
  SymmetricVar add_symmetric(const std::string& name, int n, double scale = 1.0);
  void add_lmi(std::string name, AffineMatrix m, bool strict = true);
  void add_linear(std::string name, LinExpr e, bool strict = true);
  void add_objective(const LinExpr& e);
  // Slack t_k >= |entry_k| through two linear rows each; objective += w_k t_k.
  std::vector<Var> add_l1_epigraph(const std::vector<Var>& entries,
                                   const std::vector<double>& weights,
                                   const std::string& name = "l1");

  // Relative strictness margin applied after equilibration.
  void set_margin(double eps) { margin_ = eps; }
  double margin() const { return margin_; }
  // Half-width of the box every scaled variable is confined to.
  void set_box_radius(double r) { box_radius_ = r; }
  double box_radius() const { return box_radius_; }

  std::size_t num_variables() const { return vars_.size(); }
  const std::vector<VariableInfo>& variables() const { return vars_; }
  const std::vector<LmiConstraint>& lmis() const { return lmis_; }
  const std::vector<LinearConstraint>& linear() const { return linear_; }
  const LinExpr& objective() const { return objective_; }
  bool has_objective() const { return !objective_.is_constant(); }

  // Self-contained JSON serialization for offline debugging.
  std::string to_json() const;

 private:
  void check_expr(const LinExpr& e) const;

  std::vector<VariableInfo> vars_;
  std::vector<LmiConstraint> lmis_;
  std::vector<LinearConstraint> linear_;
  LinExpr objective_;
  double margin_ = 1e-8;
  double box_radius_ = 1e4;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, Failure };
const char* to_string(SolveStatus s);

struct SolverOptions {
  double tolerance = 1e-9;
  int max_iterations = 200;
  bool parallel = true;
  // Reads MG_SOLVER_TOL when set.
  static SolverOptions from_env();
};

struct SDPSolution {
  SolveStatus status = SolveStatus::Failure;
  std::vector<double> values;
  double objective = 0.0;
  double worst_residual = 0.0;
  int iterations = 0;
  std::string diagnostics;

  bool ok() const { return status == SolveStatus::Optimal || status == SolveStatus::Feasible; }
  double value(Var v) const { return values.at(v.id); }
};

SDPSolution solve(const SDPProblem& problem, const SolverOptions& options = {});

struct BlockResidual {
  std::string name;
  double value;  // min eigenvalue for LMIs, expression value for linear rows
};

struct ResidualReport {
  std::vector<BlockResidual> lmis;
  std::vector<BlockResidual> linear;
  double worst = 0.0;
  bool empty() const { return lmis.empty() && linear.empty(); }
};

ResidualReport residual_check(const SDPProblem& problem, const std::vector<double>& x);

double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace mgc::lmi
