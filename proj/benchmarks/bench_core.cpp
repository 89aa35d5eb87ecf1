// Microbenchmarks for the hot paths: basis enumeration, Hamiltonian
// assembly, dense and iterative eigensolves, current assembly, the Kubo
// spectral sum and the frame reduction behind the flux average.
#include <benchmark/benchmark.h>

#include <numbers>
#include <random>
#include <vector>

#include "halled/hall.hpp"

using namespace halled;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

HamiltonianSpec quarter_flux(int L1, int L2, int N) {
  HamiltonianSpec spec = hofstadter(L1, L2, 1, 4, 1.0);
  spec.N = N;
  return spec;
}

void bm_build_basis(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const LatticeSpec lat{L, 4};
  for (auto _ : state) {
    FockBasis basis = build_basis(lat, L);
    benchmark::DoNotOptimize(basis.masks.data());
  }
}
BENCHMARK(bm_build_basis)->Arg(4)->Arg(6);

void bm_build_hamiltonian(benchmark::State& state) {
  const HamiltonianSpec spec = quarter_flux(4, 4, 4);  // dim 1820
  const FockBasis basis = build_basis(spec.lattice, spec.N);
  const TwistConfig tc = TwistConfig::plain(0, 0.7, 0, 1.9);
  for (auto _ : state) {
    SparseOperator h = spec.build(basis, tc);
    benchmark::DoNotOptimize(h.mat);
  }
}
BENCHMARK(bm_build_hamiltonian);

void bm_eigensolve_full(benchmark::State& state) {
  const HamiltonianSpec spec = two_well_insulator();
  const FockBasis basis = build_basis(spec.lattice, spec.N);  // dim 66
  const SparseOperator h = spec.build(basis);
  for (auto _ : state) {
    EigenDecomposition eig = eigensolve_full(h);
    benchmark::DoNotOptimize(eig.eigenvalues.data());
  }
}
BENCHMARK(bm_eigensolve_full);

void bm_eigensolve_lowest(benchmark::State& state) {
  const HamiltonianSpec spec = quarter_flux(4, 4, 4);  // dim 1820
  const FockBasis basis = build_basis(spec.lattice, spec.N);
  const SparseOperator h = spec.build(basis, TwistConfig::plain(0, 0.7, 0, 1.9));
  EigensolveOptions opts;
  opts.dense_fallback = 0;  // force the Lanczos path
  for (auto _ : state) {
    EigenDecomposition eig = eigensolve_lowest(h, 4, opts);
    benchmark::DoNotOptimize(eig.eigenvalues.data());
  }
}
BENCHMARK(bm_eigensolve_lowest);

void bm_local_current(benchmark::State& state) {
  const HamiltonianSpec spec = quarter_flux(4, 4, 4);
  const FockBasis basis = build_basis(spec.lattice, spec.N);
  const TwistConfig tc = TwistConfig::plain(0, 0.7, 0, 1.9);
  const HoppingSet twisted = apply_twist(spec.lattice, spec.hoppings, tc);
  CurrentSpec cs;
  cs.dir = 1;
  cs.k = 0;
  for (auto _ : state) {
    SparseOperator j = local_current(spec.lattice, twisted, cs, basis);
    benchmark::DoNotOptimize(j.mat);
  }
}
BENCHMARK(bm_local_current);

void bm_kubo_sum(benchmark::State& state) {
  const HamiltonianSpec spec = two_well_insulator();
  const FockBasis basis = build_basis(spec.lattice, spec.N);
  const TwistConfig tc = TwistConfig::plain(0, 0.7, 0, 1.9);
  const SparseOperator h = spec.build(basis, tc);
  const EigenDecomposition eig = eigensolve_full(h);
  const GroundMultiplet m = detect_multiplet(eig, std::nullopt);
  const HoppingSet twisted = apply_twist(spec.lattice, spec.hoppings, tc);
  CurrentSpec c1, c2;
  c1.dir = 1;
  c2.dir = 2;
  const SparseOperator j1 = local_current(spec.lattice, twisted, c1, basis);
  const SparseOperator j2 = local_current(spec.lattice, twisted, c2, basis);
  for (auto _ : state) {
    double s = kubo_sum(j1, j2, m, eig);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(bm_kubo_sum);

void bm_reduce_frames(benchmark::State& state) {
  // Synthetic smooth frames: one column, 256-dim, phase winding once around
  // the grid so the reduction has nontrivial curvature to sum.
  const int n = static_cast<int>(state.range(0));
  const int dim = 256;
  std::mt19937_64 rng(7);
  Eigen::VectorXcd base(dim);
  for (int r = 0; r < dim; ++r)
    base(r) = cplx(static_cast<double>(rng() >> 11) * 0x1p-53 - 0.5,
                   static_cast<double>(rng() >> 11) * 0x1p-53 - 0.5);
  base.normalize();
  std::vector<Eigen::MatrixXcd> frames;
  frames.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXcd v = base;
      const double a1 = kTau * i / n, a2 = kTau * j / n;
      for (int r = 0; r < dim; ++r)
        v(r) *= std::polar(1.0, (a1 * (r % 7) + a2 * (r % 5)) / 40.0);
      frames.push_back(v.normalized());
    }
  for (auto _ : state) {
    ReductionResult red =
        reduce_frames(frames, n, 1, std::nullopt, std::nullopt);
    benchmark::DoNotOptimize(red.residual);
  }
}
BENCHMARK(bm_reduce_frames)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
