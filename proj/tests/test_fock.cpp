#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "halled/fock.hpp"
#include "halled/operators.hpp"

using namespace halled;

namespace {

// Dense fermion operators on the full 2^n space, with the string running
// over lower site indices. Basis state = occupation bitmask.
Eigen::MatrixXcd dense_cdag(int n, int s) {
  const int D = 1 << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(D, D);
  for (int mask = 0; mask < D; ++mask) {
    if ((mask >> s) & 1) continue;
    const int lower = std::popcount(static_cast<unsigned>(mask) &
                                    ((1u << s) - 1u));
    m(mask | (1 << s), mask) = (lower % 2) ? -1.0 : 1.0;
  }
  return m;
}

Eigen::MatrixXcd dense_c(int n, int s) { return dense_cdag(n, s).adjoint(); }

double uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

}  // namespace

TEST_CASE("binomial coefficients") {
  CHECK(binomial(0, 0) == 1);
  CHECK(binomial(8, 3) == 56);
  CHECK(binomial(12, 6) == 924);
  CHECK(binomial(18, 6) == 18564);
  CHECK(binomial(48, 24) == 32247603683100ull);
}

TEST_CASE("binomial matches Pascal recursion up to 48") {
  for (int n = 1; n <= 48; ++n)
    for (int k = 1; k < n; ++k)
      CHECK(binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k));
}

TEST_CASE("basis masks are ascending with fixed particle count") {
  LatticeSpec lat{4, 2};
  FockBasis basis = build_basis(lat, 3);
  CHECK(basis.dim() == 56);
  CHECK(basis.n_sites == 8);
  std::uint64_t prev = 0;
  for (int r = 0; r < basis.dim(); ++r) {
    const std::uint64_t m = basis.masks[static_cast<std::size_t>(r)];
    CHECK(std::popcount(m) == 3);
    if (r > 0) CHECK(m > prev);
    prev = m;
    CHECK(basis.index_of(m) == r);
    CHECK(basis.occupied(r, std::countr_zero(m)));
  }
}

TEST_CASE("between mask covers sites strictly inside the bond") {
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) {
      const std::uint64_t m = between_mask(a, b);
      const int lo = std::min(a, b), hi = std::max(a, b);
      for (int s = 0; s < 12; ++s) {
        const bool inside = s > lo && s < hi;
        CHECK(((m >> s) & 1ull) == static_cast<std::uint64_t>(inside));
      }
    }
}

TEST_CASE("hop matrix elements preserve particle number and report signs") {
  const std::uint64_t mask = 0b0110101ull;
  SUBCASE("annihilating an empty site fails") {
    CHECK(!matrix_element_hop(mask, 3, 1).has_value());
  }
  SUBCASE("creating on an occupied site fails") {
    CHECK(!matrix_element_hop(mask, 2, 0).has_value());
  }
  SUBCASE("diagonal term is the occupation") {
    auto he = matrix_element_hop(mask, 0, 0);
    REQUIRE(he.has_value());
    CHECK(he->mask == mask);
    CHECK(he->sign == 1);
    CHECK(!matrix_element_hop(mask, 1, 1).has_value());
  }
  SUBCASE("string sign counts occupied sites strictly between") {
    // 5 -> 3: site 4 occupied between them: one swap.
    auto he = matrix_element_hop(mask, 3, 5);
    REQUIRE(he.has_value());
    CHECK(std::popcount(he->mask) == std::popcount(mask));
    CHECK(he->sign == -1);
  }
}

TEST_CASE("many-body assembly matches the dense Jordan-Wigner oracle") {
  LatticeSpec lat{4, 2};
  const int n = lat.n_sites();
  const int D = 1 << n;
  std::mt19937_64 rng(0xF0CCu);

  HoppingSet hops;
  hops.range = 4;
  // Random Hermitian bonds, including a wrap bond and an onsite term.
  const std::pair<int, int> bonds[] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                       {4, 5}, {0, 4}, {2, 6}, {1, 6}};
  for (auto [x, y] : bonds)
    hops.add(x, y, cplx(uniform(rng) - 0.5, uniform(rng) - 0.5));
  hops.add_onsite(5, 0.37);

  InteractionSet ints;
  ints.range = 4;
  ints.add({0, 1}, 0.8);
  ints.add({2, 6}, -0.45);
  ints.add({1, 2, 3}, 0.21);
  for (int s = 0; s < n; ++s) ints.add_onsite(s, 0.05 * s);

  // Dense oracle on the full Fock space.
  Eigen::MatrixXcd hd = Eigen::MatrixXcd::Zero(D, D);
  for (const auto& [key, t] : hops.entries)
    hd += t * (dense_cdag(n, key.first) * dense_c(n, key.second));
  for (const auto& term : ints.terms) {
    Eigen::MatrixXcd prod = Eigen::MatrixXcd::Identity(D, D);
    for (int s : term.sites) prod = prod * (dense_cdag(n, s) * dense_c(n, s));
    hd += term.u * prod;
  }
  CHECK((hd - hd.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  for (int N : {1, 2, 3}) {
    FockBasis basis = build_basis(lat, N);
    const Eigen::MatrixXcd hs =
        build_hamiltonian(lat, hops, ints, basis).dense();
    double max_diff = 0;
    for (int r = 0; r < basis.dim(); ++r)
      for (int c = 0; c < basis.dim(); ++c)
        max_diff = std::max(
            max_diff,
            std::abs(hs(r, c) - hd(static_cast<int>(basis.masks[r]),
                                   static_cast<int>(basis.masks[c]))));
    CHECK(max_diff < 1e-13);
  }
}

TEST_CASE("dense oracle operators satisfy the anticommutation algebra") {
  const int n = 6;
  const int D = 1 << n;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const Eigen::MatrixXcd cx = dense_c(n, x);
      const Eigen::MatrixXcd cdy = dense_cdag(n, y);
      const Eigen::MatrixXcd acomm = cx * cdy + cdy * cx;
      Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(D, D);
      if (x == y) expected.setIdentity();
      CHECK((acomm - expected).cwiseAbs().maxCoeff() < 1e-14);
      const Eigen::MatrixXcd cy = dense_c(n, y);
      CHECK((cx * cy + cy * cx).cwiseAbs().maxCoeff() < 1e-14);
    }
}
