#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "halled/errors.hpp"
#include "halled/models.hpp"
#include "halled/spectra.hpp"

using namespace halled;

namespace {

// Product of arrival amplitudes around the elementary plaquette with lower
// left corner x, traversed (x) -> (x+e1) -> (x+e1+e2) -> (x+e2) -> (x).
cplx plaquette_product(const HamiltonianSpec& spec, Site x) {
  const LatticeSpec& lat = spec.lattice;
  const int a = lat.index(lat.wrap(x));
  const int b = lat.index(lat.wrap({x.x1 + 1, x.x2}));
  const int c = lat.index(lat.wrap({x.x1 + 1, x.x2 + 1}));
  const int d = lat.index(lat.wrap({x.x1, x.x2 + 1}));
  return spec.hoppings.at(b, a) * spec.hoppings.at(c, b) *
         spec.hoppings.at(d, c) * spec.hoppings.at(a, d);
}

}  // namespace

TEST_CASE("magnetic hoppings put uniform flux through every plaquette") {
  // L2 >= 3 keeps the two vertical bonds of a column distinct; on L2 = 2
  // they share one map entry and interfere.
  const double t = 0.8;
  HamiltonianSpec spec = hofstadter(4, 3, 1, 4, t);
  const cplx expected =
      std::pow(t, 4) * std::exp(cplx(0, -2 * std::numbers::pi / 4));
  for (int x1 = 0; x1 < 4; ++x1)
    for (int x2 = 0; x2 < 3; ++x2) {
      CHECK(std::abs(plaquette_product(spec, {x1, x2}) - expected) < 1e-13);
    }
  CHECK_NOTHROW(spec.hoppings.validate(spec.lattice));
}

TEST_CASE("flux denominators must divide the torus width") {
  CHECK_THROWS_AS(hofstadter(6, 2, 1, 4, 1.0), ConfigError);
  try {
    hofstadter(6, 2, 1, 4, 1.0);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("incommensurate") != std::string::npos);
  }
  CHECK_NOTHROW(hofstadter(6, 2, 1, 3, 1.0));
  CHECK_THROWS_AS(hofstadter(4, 2, 1, 0, 1.0), ConfigError);
}

TEST_CASE("hubbard variant layers interactions over the magnetic hoppings") {
  HamiltonianSpec spec =
      hofstadter_hubbard(4, 2, 1, 4, 1.0, 2.0, 3, {{5, -1.5}});
  CHECK(spec.N == 3);
  CHECK(spec.hoppings.entries.size() ==
        hofstadter(4, 2, 1, 4, 1.0).hoppings.entries.size());
  // 2 nearest-neighbor terms per site plus the onsite potential.
  CHECK(spec.interactions.terms.size() == 2u * 8u + 1u);
  CHECK_NOTHROW(spec.interactions.validate(spec.lattice));
  CHECK_THROWS_AS(hofstadter_hubbard(4, 2, 1, 4, 1.0, -0.5, 3), ConfigError);
  CHECK_THROWS_AS(hofstadter_hubbard(4, 2, 1, 4, 1.0, 2.0, 3, {{99, 1.0}}),
                  ConfigError);
}

TEST_CASE("atomic insulator is hop-free with onsite spectrum") {
  std::vector<double> pots = {0.0, -1.0, 0.5, 2.0, -0.5, 1.0, 3.0, 0.25};
  HamiltonianSpec spec = atomic_insulator(4, 2, pots, 3);
  CHECK(spec.hoppings.entries.empty());
  FockBasis basis = build_basis(spec.lattice, 3);
  SparseOperator h = spec.build(basis);
  EigenDecomposition eig = eigensolve_full(h);
  // Ground energy = sum of the three lowest potentials.
  CHECK(eig.eigenvalues(0) == doctest::Approx(-1.0 - 0.5 + 0.0));
  GroundMultiplet m = detect_multiplet(eig, 1);
  CHECK(m.q == 1);

  SUBCASE("degenerate boundary rejected unless allowed") {
    std::vector<double> tied = {0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0, 2.0};
    CHECK_THROWS_AS(atomic_insulator(4, 2, tied, 2), ConfigError);
    CHECK_NOTHROW(atomic_insulator(4, 2, tied, 2, false));
    CHECK_NOTHROW(atomic_insulator(4, 2, tied, 3));
  }
  SUBCASE("potential count must match the lattice") {
    CHECK_THROWS_AS(atomic_insulator(4, 2, {1.0, 2.0}, 1), ConfigError);
  }
}

TEST_CASE("open chains have no wrap bond") {
  HamiltonianSpec spec = open_chain(6, 1.0, 0.1, 2);
  const LatticeSpec& lat = spec.lattice;
  CHECK(lat.L1 == 6);
  CHECK(lat.L2 == 2);
  CHECK(spec.hoppings.entries.size() == 2u * 5u);
  CHECK(spec.hoppings.at(lat.index({5, 0}), lat.index({0, 0})) ==
        cplx(0, 0));
  CHECK(spec.hoppings.at(lat.index({1, 0}), lat.index({0, 0})) ==
        cplx(-1.0, 0));
  // Second row stays empty: no bonds touch x2 = 1.
  for (const auto& [key, t] : spec.hoppings.entries) {
    CHECK(lat.coord(2, key.first) == 0);
    CHECK(lat.coord(2, key.second) == 0);
  }
  CHECK_THROWS_AS(open_chain(5, 1.0, 0.1, 2), ConfigError);
  CHECK_THROWS_AS(open_chain(1, 1.0, 0.1, 1), ConfigError);
}

TEST_CASE("the reference insulator has a unique gapped ground state") {
  HamiltonianSpec spec = two_well_insulator();
  CHECK(spec.lattice.L1 == 4);
  CHECK(spec.lattice.L2 == 3);
  CHECK(spec.N == 2);
  FockBasis basis = build_basis(spec.lattice, spec.N);
  CHECK(basis.dim() == 66);
  EigenDecomposition eig = eigensolve_full(spec.build(basis));
  GroundMultiplet m = detect_multiplet(eig, std::nullopt);
  CHECK(m.q == 1);
  CHECK(m.gap > 0.1);
}

TEST_CASE("correlation probe model pins the spectator well") {
  HamiltonianSpec spec = correlation_probe_model();
  CHECK(spec.lattice.L1 == 6);
  CHECK(spec.lattice.L2 == 4);
  CHECK(spec.N == 2);
  const int spectator = spec.lattice.index({1, 2});
  double depth = 0;
  for (const auto& term : spec.interactions.terms)
    if (term.sites.size() == 1 && term.sites[0] == spectator)
      depth += term.u;
  CHECK(depth == doctest::Approx(-30.0 + 0.035 * 1 + 0.021 * 2));
  CHECK_NOTHROW(spec.hoppings.validate(spec.lattice));
  CHECK_NOTHROW(spec.interactions.validate(spec.lattice));
}

TEST_CASE("presets are pure functions of their parameters") {
  HamiltonianSpec a = two_well_insulator(0.03, 0.5);
  HamiltonianSpec b = two_well_insulator(0.03, 0.5);
  CHECK(a.hoppings.entries == b.hoppings.entries);
  REQUIRE(a.interactions.terms.size() == b.interactions.terms.size());
  for (std::size_t i = 0; i < a.interactions.terms.size(); ++i) {
    CHECK(a.interactions.terms[i].sites == b.interactions.terms[i].sites);
    CHECK(a.interactions.terms[i].u == b.interactions.terms[i].u);
  }
}
