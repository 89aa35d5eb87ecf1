#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "halled/errors.hpp"
#include "halled/lattice.hpp"

using namespace halled;

TEST_CASE("index and site are inverse maps and wrap periodically") {
  LatticeSpec lat{6, 4};
  lat.validate();
  CHECK(lat.n_sites() == 24);
  for (int s = 0; s < lat.n_sites(); ++s) {
    Site x = lat.site(s);
    CHECK(lat.index(x) == s);
    CHECK(x.x1 >= 0);
    CHECK(x.x1 < 6);
    CHECK(x.x2 >= 0);
    CHECK(x.x2 < 4);
  }
  CHECK(lat.index({6, 4}) == lat.index({0, 0}));
  CHECK(lat.index({-1, -1}) == lat.index({5, 3}));
  CHECK(lat.coord(1, lat.index({3, 2})) == 3);
  CHECK(lat.coord(2, lat.index({3, 2})) == 2);
  CHECK(lat.length(1) == 6);
  CHECK(lat.length(2) == 4);
}

TEST_CASE("side constraints reject degenerate and odd-L1 tori") {
  CHECK_THROWS_AS((LatticeSpec{1, 4}.validate()), ConfigError);
  CHECK_THROWS_AS((LatticeSpec{4, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((LatticeSpec{5, 4}.validate()), ConfigError);
  CHECK_NOTHROW((LatticeSpec{4, 3}.validate()));
  CHECK_NOTHROW((LatticeSpec{2, 2}.validate()));
}

TEST_CASE("periodic distance is a wrapped taxicab metric") {
  LatticeSpec lat{6, 4};
  CHECK(lat.periodic_distance({0, 0}, {5, 0}) == 1);
  CHECK(lat.periodic_distance({0, 0}, {3, 0}) == 3);
  CHECK(lat.periodic_distance({0, 0}, {0, 3}) == 1);
  CHECK(lat.periodic_distance({1, 1}, {4, 3}) == 5);
  for (int a = 0; a < lat.n_sites(); ++a)
    for (int b = 0; b < lat.n_sites(); ++b)
      CHECK(lat.periodic_distance(lat.site(a), lat.site(b)) ==
            lat.periodic_distance(lat.site(b), lat.site(a)));
}

TEST_CASE("crossing counts are antisymmetric for every pair and cut") {
  LatticeSpec lat{6, 4};
  for (int dir : {1, 2}) {
    const int L = lat.length(dir);
    for (int k = 0; k < L; ++k)
      for (int a = 0; a < lat.n_sites(); ++a)
        for (int b = 0; b < lat.n_sites(); ++b)
          CHECK(cut_crossing(lat, dir, k, a, b) ==
                -cut_crossing(lat, dir, k, b, a));
  }
}

TEST_CASE("unit steps cross a cut exactly at its column") {
  LatticeSpec lat{6, 4};
  for (int k = 0; k < 6; ++k)
    for (int x1 = 0; x1 < 6; ++x1)
      for (int x2 = 0; x2 < 4; ++x2) {
        const int a = lat.index({x1, x2});
        const int b = lat.index({x1 + 1, x2});
        const int expected = ((x1 + 1) % 6 == k) ? 1 : 0;
        CHECK(cut_crossing(lat, 1, k, a, b) == expected);
        CHECK(cut_crossing(lat, 2, 1, a, b) == 0);  // no motion along 2
      }
}

TEST_CASE("one full cycle crosses each cut exactly once") {
  LatticeSpec lat{6, 4};
  for (int dir : {1, 2}) {
    const int L = lat.length(dir);
    for (int k = 0; k < L; ++k) {
      int total = 0;
      for (int step = 0; step < L; ++step) {
        const Site from = dir == 1 ? Site{step, 2} : Site{1, step};
        const Site to = dir == 1 ? Site{step + 1, 2} : Site{1, step + 1};
        total += cut_crossing(lat, dir, k, lat.index(from), lat.index(to));
      }
      CHECK(total == 1);
    }
  }
}

TEST_CASE("half-torus displacements use the upward tie-break") {
  LatticeSpec lat{4, 4};
  const int a = lat.index({0, 0});
  const int b = lat.index({2, 0});
  // Traverse upward from the smaller coordinate: crossings at k = 1, 2 only.
  CHECK(cut_crossing(lat, 1, 0, a, b) == 0);
  CHECK(cut_crossing(lat, 1, 1, a, b) == 1);
  CHECK(cut_crossing(lat, 1, 2, a, b) == 1);
  CHECK(cut_crossing(lat, 1, 3, a, b) == 0);
  CHECK(cut_crossing(lat, 1, 1, b, a) == -1);
}

TEST_CASE("step cut marks the forward half-torus") {
  LatticeSpec lat{6, 4};
  CutFunction c = CutFunction::step(1, 2);
  for (int x1 = 0; x1 < 6; ++x1) {
    const double expected = (x1 == 2 || x1 == 3 || x1 == 4) ? 1.0 : 0.0;
    CHECK(c.eval(lat, {x1, 1}) == expected);
  }
  CHECK(c.is_step());
  CHECK_THROWS_AS(CutFunction::step(3, 0), ConfigError);
}

TEST_CASE("deformed cut changes values only inside the anchor ball") {
  LatticeSpec lat{6, 4};
  std::unordered_map<int, double> values;
  values[lat.index({0, 1})] = 0.25;
  values[lat.index({1, 1})] = -0.4;
  CutFunction c = CutFunction::deformed(1, 0, {0, 1}, 3, values, lat);
  CHECK(!c.is_step());
  CHECK(c.eval(lat, {0, 1}) == 0.25);
  CHECK(c.eval(lat, {1, 1}) == -0.4);
  // Untouched site falls back to the step value.
  CHECK(c.eval(lat, {2, 1}) == CutFunction::step(1, 0).eval(lat, {2, 1}));
  CHECK(c.delta(lat, lat.index({0, 1})) ==
        0.25 - CutFunction::step(1, 0).eval(lat, {0, 1}));
  CHECK(c.delta(lat, lat.index({3, 3})) == 0.0);

  std::unordered_map<int, double> far;
  far[lat.index({3, 3})] = 0.1;  // distance 5 from the anchor
  CHECK_THROWS_AS(CutFunction::deformed(1, 0, {0, 1}, 3, far, lat),
                  ConfigError);
}

TEST_CASE("regions are wrapped boxes with validated extent") {
  LatticeSpec lat{6, 4};
  Region r{1, 0, 1};
  const auto sites = r.sites(lat);
  CHECK(sites.size() == 9);
  for (int s : sites) {
    const Site x = lat.site(s);
    const bool in1 = x.x1 == 0 || x.x1 == 1 || x.x1 == 2;
    const bool in2 = x.x2 == 0 || x.x2 == 1 || x.x2 == 2;
    CHECK(in1);
    CHECK(in2);
  }
  CHECK_THROWS_AS((Region{0, 0, 3}.validate(LatticeSpec{6, 4})), ConfigError);
  CHECK_THROWS_AS((Region{0, 0, -1}.validate(LatticeSpec{6, 4})), ConfigError);
}
