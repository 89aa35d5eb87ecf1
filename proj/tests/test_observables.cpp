#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "halled/errors.hpp"
#include "halled/models.hpp"
#include "halled/observables.hpp"

using namespace halled;

namespace {

SparseOperator random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1p-53 - 0.5; };
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(u(), u());
  Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  return SparseOperator::from_dense(h, true);
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a,
                            const Eigen::MatrixXcd& b) {
  return a * b - b * a;
}

SparseOperator density(const LatticeSpec& lat, const FockBasis& basis,
                       Site x) {
  std::vector<double> w(static_cast<std::size_t>(lat.n_sites()), 0.0);
  w[static_cast<std::size_t>(lat.index(x))] = 1.0;
  return diagonal_from_weights(w, basis);
}

}  // namespace

TEST_CASE("current across a cut closes the charge continuity identity") {
  // i[H, theta_k] = J(k) - J(k + ceil(L/2)) with all operators built from the
  // same twisted hoppings.
  HamiltonianSpec spec = hofstadter(4, 3, 1, 4, 1.0);
  FockBasis basis = build_basis(spec.lattice, 2);
  TwistConfig tc = TwistConfig::plain(1, 0.8, 0, 1.3);
  HoppingSet hops = apply_twist(spec.lattice, spec.hoppings, tc);
  SparseOperator h =
      build_hamiltonian(spec.lattice, hops, spec.interactions, basis);
  const Eigen::MatrixXcd hd = h.dense();
  for (int k = 0; k < spec.lattice.L1; ++k) {
    SparseOperator theta =
        diagonal_from_cut(CutFunction::step(1, k), spec.lattice, basis);
    CurrentSpec near, far;
    near.dir = 1;
    near.k = k;
    far.dir = 1;
    far.k = (k + (spec.lattice.L1 + 1) / 2) % spec.lattice.L1;
    SparseOperator jk = local_current(spec.lattice, hops, near, basis);
    SparseOperator js = local_current(spec.lattice, hops, far, basis);
    Eigen::MatrixXcd lhs = cplx(0, 1) * commutator(hd, theta.dense());
    Eigen::MatrixXcd rhs = jk.dense() - js.dense();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("row windows partition the direction-1 current") {
  HamiltonianSpec spec = hofstadter(4, 3, 1, 4, 1.0);
  FockBasis basis = build_basis(spec.lattice, 2);
  CurrentSpec plain;
  plain.dir = 1;
  plain.k = 1;
  SparseOperator full =
      local_current(spec.lattice, spec.hoppings, plain, basis);

  SUBCASE("a window covering every row saturates to the plain current") {
    CurrentSpec wide = plain;
    wide.window = std::pair<int, int>{0, 1};  // 2*1+1 = 3 rows = L2
    SparseOperator w =
        windowed_current(spec.lattice, spec.hoppings, wide, basis);
    CHECK((w.dense() - full.dense()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("single-row windows sum to the plain current") {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(basis.dim(), basis.dim());
    for (int l = 0; l < spec.lattice.L2; ++l) {
      CurrentSpec row = plain;
      row.window = std::pair<int, int>{l, 0};
      acc += windowed_current(spec.lattice, spec.hoppings, row, basis).dense();
    }
    CHECK((acc - full.dense()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("deformed current adds the commutator of the site density") {
  HamiltonianSpec spec = hofstadter(4, 3, 1, 4, 1.0);
  FockBasis basis = build_basis(spec.lattice, 2);
  SparseOperator h = spec.build(basis);
  const double alpha = 0.37;
  const int site = 5;
  CurrentSpec cs;
  cs.dir = 1;
  cs.k = 2;
  cs.deformation = std::pair<double, int>{alpha, site};
  SparseOperator j =
      deformed_current(spec.lattice, spec.hoppings, cs, h, basis);
  SparseOperator j0 = local_current(spec.lattice, spec.hoppings, cs, basis);
  SparseOperator n = density(spec.lattice, basis, spec.lattice.site(site));
  Eigen::MatrixXcd expected =
      j0.dense() + cplx(0, alpha) * commutator(h.dense(), n.dense());
  CHECK((j.dense() - expected).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(j.hermiticity_defect() < 1e-13);
}

TEST_CASE("region charge is the indicator diagonal") {
  LatticeSpec lat{6, 4};
  FockBasis basis = build_basis(lat, 2);
  Region region{1, 0, 1};
  std::vector<double> w(static_cast<std::size_t>(lat.n_sites()), 0.0);
  for (int s : region.sites(lat)) w[static_cast<std::size_t>(s)] = 1.0;
  SparseOperator chi = region_charge(region, lat, basis);
  CHECK((chi.dense() - diagonal_from_weights(w, basis).dense())
            .cwiseAbs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("heisenberg evolution is unitary and composes") {
  SparseOperator h = random_hermitian(20, 0x11ull);
  SparseOperator a = random_hermitian(20, 0x22ull);
  EigenDecomposition eig = eigensolve_full(h);

  SparseOperator a0 = heisenberg(a, eig, 0.0);
  CHECK((a0.dense() - a.dense()).cwiseAbs().maxCoeff() < 1e-12);

  SparseOperator at = heisenberg(a, eig, 0.9);
  CHECK(at.dense().norm() == doctest::Approx(a.dense().norm()));

  SparseOperator once_more = heisenberg(at, eig, 0.4);
  SparseOperator direct = heisenberg(a, eig, 1.3);
  CHECK((once_more.dense() - direct.dense()).cwiseAbs().maxCoeff() < 1e-11);

  CHECK_THROWS_AS(heisenberg(a, eig, cplx(0.0, 300.0)), ResourceError);
}

TEST_CASE("static correlator symmetries") {
  SparseOperator h = random_hermitian(18, 0x33ull);
  EigenDecomposition eig = eigensolve_full(h);
  GroundMultiplet m = detect_multiplet(eig, 1);
  SparseOperator a = random_hermitian(18, 0x44ull);
  SparseOperator b = random_hermitian(18, 0x55ull);

  cplx ab = corr(a, b, m, eig);
  cplx ba = corr(b, a, m, eig);
  CHECK(std::abs(ab - std::conj(ba)) < 1e-13);

  cplx aa = corr(a, a, m, eig);
  CHECK(aa.real() >= 0.0);
  CHECK(std::abs(aa.imag()) < 1e-13);

  cplx with_identity = corr(a, SparseOperator::identity(18), m, eig);
  CHECK(std::abs(with_identity) < 1e-13);
}

TEST_CASE("excitation ratio of a two-level ladder is the level spacing") {
  SparseOperator h = SparseOperator::diagonal({0.0, 0.7, 1.9});
  EigenDecomposition eig = eigensolve_full(h);
  GroundMultiplet m = detect_multiplet(eig, 1);

  std::vector<Triplet> up;
  up.emplace_back(1, 0, cplx(1.0, 0.0));
  SparseOperator raise = SparseOperator::from_triplets(3, up, false);
  CHECK(excitation_ratio(raise, h, m) == doctest::Approx(0.7).epsilon(1e-12));

  std::vector<Triplet> down;
  down.emplace_back(0, 1, cplx(1.0, 0.0));
  SparseOperator lower = SparseOperator::from_triplets(3, down, false);
  CHECK_THROWS_AS(excitation_ratio(lower, h, m), ToleranceError);
}

TEST_CASE("gaussian energy filter stays within the tail bound") {
  SparseOperator h = random_hermitian(16, 0x66ull);
  EigenDecomposition eig = eigensolve_full(h);
  FilterSpec fs;
  fs.a0 = random_hermitian(16, 0x77ull);
  fs.K = 4.0;
  fs.center = 0.0;
  fs.T1 = 6.0;
  FilterResult res = energy_filter(fs, eig);
  REQUIRE(res.truncated.has_value());
  CHECK(res.bound == doctest::Approx(operator_norm(fs.a0) *
                                     std::exp(-36.0 / 8.0)));
  CHECK(res.deviation <= res.bound);
  CHECK(res.quad_error < res.bound);
}

TEST_CASE("restricted evolution gap bound") {
  SUBCASE("identical generators give zero deviation") {
    HamiltonianSpec spec = open_chain(4, 1.0, 0.1, 2);
    FockBasis basis = build_basis(spec.lattice, spec.N);
    SparseOperator h = spec.build(basis);
    std::vector<int> omega;
    for (int s = 0; s < spec.lattice.n_sites(); ++s) omega.push_back(s);
    SparseOperator a = density(spec.lattice, basis, {1, 0});
    EvolutionGapReport rep = restricted_evolution_gap(
        a, h, h, basis, omega, {0.0, 0.5, 1.0});
    CHECK(rep.pass);
    for (double v : rep.lhs) CHECK(v < 1e-10);
  }
  SUBCASE("chain truncation obeys the integral bound") {
    HamiltonianSpec spec = open_chain(6, 1.0, 0.1, 2);
    FockBasis basis = build_basis(spec.lattice, spec.N);
    SparseOperator h = spec.build(basis);
    std::vector<int> omega = {0, 1, 2, 3};
    SparseOperator h_omega = build_hamiltonian(
        spec.lattice, restrict_hops(spec.hoppings, omega),
        restrict_ints(spec.interactions, omega), basis);
    SparseOperator a = density(spec.lattice, basis, {2, 0});
    std::vector<double> t_grid;
    for (int i = 0; i <= 5; ++i) t_grid.push_back(0.2 * i);
    EvolutionGapReport rep =
        restricted_evolution_gap(a, h, h_omega, basis, omega, t_grid);
    CHECK(rep.pass);
    CHECK(rep.lhs.front() < 1e-12);
    CHECK(rep.lhs.back() > 1e-6);  // the truncation really bites
    for (std::size_t i = 0; i < rep.t.size(); ++i)
      CHECK(rep.lhs[i] <= rep.rhs[i] * (1 + rep.slack) + 1e-9);
  }
}

TEST_CASE("commutator growth saturates below twice the norm product") {
  HamiltonianSpec spec = open_chain(6, 1.0, 0.1, 2);
  FockBasis basis = build_basis(spec.lattice, spec.N);
  SparseOperator h = spec.build(basis);
  EigenDecomposition eig = eigensolve_full(h);
  SparseOperator src = density(spec.lattice, basis, {0, 0});
  std::vector<LRProbe> probes;
  for (int d : {2, 3, 4}) {
    LRProbe p;
    p.a = src;
    p.b = density(spec.lattice, basis, {d, 0});
    p.distance = d;
    probes.push_back(p);
  }
  std::vector<double> t_grid = {0.0, 0.3, 0.6, 1.0, 1.5, 2.0};
  LREnvelope env = commutator_growth(probes, eig, t_grid);
  REQUIRE(env.samples.size() == probes.size() * t_grid.size());
  for (const LRSample& s : env.samples) {
    CHECK(s.norm <= s.saturation + 1e-12);
    if (s.t == 0.0) CHECK(s.norm < 1e-12);
  }
  CHECK(env.v > 0.0);
  CHECK(env.mu > 0.0);
}
