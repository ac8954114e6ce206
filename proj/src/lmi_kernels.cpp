// SPDX-License-Identifier: Apache-2.0
#include "mgc/lmi_kernels.hpp"

#include <omp.h>

namespace mgc::lmi {

void SparseSym::push(int r, int c, double v) {
  if (v == 0.0) return;
  row.push_back(r);
  col.push_back(c);
  val.push_back(v);
  if (r != c) {
    row.push_back(c);
    col.push_back(r);
    val.push_back(v);
  }
}

Eigen::MatrixXd SparseSym::dense(int n) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < val.size(); ++k) m(row[k], col[k]) += val[k];
  return m;
}

double SparseSym::trace_product(const Eigen::MatrixXd& m) const {
  double s = 0.0;
  for (std::size_t k = 0; k < val.size(); ++k) s += val[k] * m(col[k], row[k]);
  return s;
}

void schur_block_serial(const DenseBlock& block, const Eigen::MatrixXd& X,
                        const Eigen::MatrixXd& Zinv, Eigen::MatrixXd& M) {
  const int m = static_cast<int>(block.F.size());
  std::vector<Eigen::MatrixXd> left(m);
  std::vector<Eigen::MatrixXd> right(m);
  for (int i = 0; i < m; ++i) {
    if (block.F[i].nnz() == 0) continue;
    Eigen::MatrixXd Fi = block.F[i].dense(block.n);
    left[i] = Fi * X;
    right[i] = Fi * Zinv;
  }
  for (int i = 0; i < m; ++i) {
    if (left[i].size() == 0) continue;
    for (int j = 0; j < m; ++j) {
      if (right[j].size() == 0) continue;
      M(i, j) += (left[i] * right[j]).trace();
    }
  }
}

void schur_block_parallel(const DenseBlock& block, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& Zinv, Eigen::MatrixXd& M) {
  const int m = static_cast<int>(block.F.size());
  const int n = block.n;
  std::vector<int> active;
  for (int i = 0; i < m; ++i)
    if (block.F[i].nnz() > 0) active.push_back(i);
  const int na = static_cast<int>(active.size());

#pragma omp parallel
  {
    Eigen::MatrixXd V(n, n);
#pragma omp for schedule(dynamic)
    for (int a = 0; a < na; ++a) {
      const SparseSym& Fi = block.F[active[a]];
      // V = Zinv * F_i * X, accumulated from the nonzeros of F_i
      V.setZero();
      for (std::size_t k = 0; k < Fi.nnz(); ++k)
        V.noalias() += Fi.val[k] * Zinv.col(Fi.row[k]) * X.row(Fi.col[k]);
      for (int b = a; b < na; ++b) {
        const SparseSym& Fj = block.F[active[b]];
        double s = 0.0;
        for (std::size_t k = 0; k < Fj.nnz(); ++k) s += Fj.val[k] * V(Fj.col[k], Fj.row[k]);
        M(active[a], active[b]) += s;
        if (b != a) M(active[b], active[a]) += s;
      }
    }
  }
}

}  // namespace mgc::lmi
