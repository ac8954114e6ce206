// SPDX-License-Identifier: Apache-2.0
// Serial and OpenMP Schur-complement assembly on a synthetic block.
#include <benchmark/benchmark.h>

#include <random>

#include "mgc/lmi_kernels.hpp"

using Eigen::MatrixXd;
using mgc::lmi::DenseBlock;

namespace {

struct Fixture {
  DenseBlock block;
  MatrixXd X, Zinv;
};

Fixture make_fixture(int n, int vars) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> idx(0, n - 1);
  Fixture f;
  f.block.n = n;
  f.block.F0 = MatrixXd::Zero(n, n);
  f.block.F.resize(vars);
  for (auto& F : f.block.F)
    for (int k = 0; k < 6; ++k) F.push(idx(rng), idx(rng), u(rng));
  const MatrixXd G = MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
  f.X = G * G.transpose() + MatrixXd::Identity(n, n);
  f.Zinv = f.X.inverse();
  return f;
}

template <auto Kernel>
void run(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  MatrixXd M(f.block.F.size(), f.block.F.size());
  for (auto _ : state) {
    M.setZero();
    Kernel(f.block, f.X, f.Zinv, M);
    benchmark::DoNotOptimize(M.data());
  }
}

}  // namespace

BENCHMARK(run<mgc::lmi::schur_block_serial>)
    ->Name("schur_serial")
    ->Args({24, 60})
    ->Args({48, 200})
    ->Args({96, 400})
    ->Unit(benchmark::kMicrosecond);
BENCHMARK(run<mgc::lmi::schur_block_parallel>)
    ->Name("schur_parallel")
    ->Args({24, 60})
    ->Args({48, 200})
    ->Args({96, 400})
    ->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
