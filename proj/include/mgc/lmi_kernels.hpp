// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mgc::lmi {

// Symmetric coefficient matrix stored as a full (both triangles) triplet list.
struct SparseSym {
  std::vector<int> row;
  std::vector<int> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
  void push(int r, int c, double v);  // adds (r,c) and, when r != c, (c,r)
  Eigen::MatrixXd dense(int n) const;
  double trace_product(const Eigen::MatrixXd& m) const;  // tr(F M)
};

struct DenseBlock {
  int n = 0;
  Eigen::MatrixXd F0;
  std::vector<SparseSym> F;  // one per variable, empty when absent
};

// M(i, j) += tr(F_i X F_j Zinv) over the block. Dense reference implementation.
void schur_block_serial(const DenseBlock& block, const Eigen::MatrixXd& X,
                        const Eigen::MatrixXd& Zinv, Eigen::MatrixXd& M);

// Same contraction using the sparsity of F_i, rows distributed over OpenMP threads.
void schur_block_parallel(const DenseBlock& block, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& Zinv, Eigen::MatrixXd& M);

}  // namespace mgc::lmi
