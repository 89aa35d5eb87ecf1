#include "halled/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "halled/errors.hpp"

namespace halled {

namespace {

void add_hofstadter_hops(HamiltonianSpec& spec, int flux_num, int flux_den,
                         double t) {
  const LatticeSpec& lat = spec.lattice;
  for (int i = 0; i < lat.n_sites(); ++i) {
    Site x = lat.site(i);
    int right = lat.index({x.x1 + 1, x.x2});
    spec.hoppings.add(right, i, cplx(-t, 0));
    int up = lat.index({x.x1, x.x2 + 1});
    // downward transfer (x1, x2+1) -> (x1, x2) carries the Peierls phase
    cplx ph = std::exp(cplx(0, 2 * std::numbers::pi *
                                   (static_cast<double>(flux_num) / flux_den) *
                                   x.x1));
    spec.hoppings.add(i, up, -t * ph);
  }
}

void add_nn_interactions(HamiltonianSpec& spec, double v) {
  const LatticeSpec& lat = spec.lattice;
  for (int i = 0; i < lat.n_sites(); ++i) {
    Site x = lat.site(i);
    spec.interactions.add({i, lat.index({x.x1 + 1, x.x2})}, v);
    spec.interactions.add({i, lat.index({x.x1, x.x2 + 1})}, v);
  }
}

}  // namespace

HamiltonianSpec hofstadter(int L1, int L2, int flux_num, int flux_den,
                           double t) {
  if (flux_den <= 0) throw ConfigError("flux denominator must be positive");
  if (L1 % flux_den != 0)
    throw ConfigError("flux " + std::to_string(flux_num) + "/" +
                      std::to_string(flux_den) +
                      " incommensurate with torus: " +
                      std::to_string(flux_den) + " does not divide L1 = " +
                      std::to_string(L1));
  HamiltonianSpec spec;
  spec.name = "hofstadter";
  spec.lattice = {L1, L2};
  spec.lattice.validate();
  spec.N = 0;
  add_hofstadter_hops(spec, flux_num, flux_den, t);
  return spec;
}

HamiltonianSpec hofstadter_hubbard(int L1, int L2, int flux_num, int flux_den,
                                   double t, double v_nn, int N,
                                   const std::map<int, double>& onsite) {
  if (v_nn < 0) throw ConfigError("nearest-neighbor coupling must be >= 0");
  HamiltonianSpec spec = hofstadter(L1, L2, flux_num, flux_den, t);
  spec.name = "hofstadter_hubbard";
  spec.N = N;
  if (v_nn != 0) add_nn_interactions(spec, v_nn);
  for (const auto& [site, u] : onsite) {
    if (site < 0 || site >= spec.lattice.n_sites())
      throw ConfigError("onsite potential site out of range");
    spec.interactions.add_onsite(site, u);
  }
  return spec;
}

HamiltonianSpec atomic_insulator(int L1, int L2,
                                 const std::vector<double>& potentials, int N,
                                 bool unique_ground) {
  HamiltonianSpec spec;
  spec.name = "atomic_insulator";
  spec.lattice = {L1, L2};
  spec.lattice.validate();
  if (static_cast<int>(potentials.size()) != spec.lattice.n_sites())
    throw ConfigError("need one potential per site");
  spec.N = N;
  if (unique_ground && N > 0 && N < spec.lattice.n_sites()) {
    std::vector<double> sorted = potentials;
    std::sort(sorted.begin(), sorted.end());
    if (!(sorted[static_cast<std::size_t>(N)] >
          sorted[static_cast<std::size_t>(N - 1)] + 1e-12))
      throw ConfigError(
          "degenerate potential minima: ground state not unique");
  }
  for (int s = 0; s < spec.lattice.n_sites(); ++s)
    if (potentials[static_cast<std::size_t>(s)] != 0.0)
      spec.interactions.add_onsite(s,
                                   potentials[static_cast<std::size_t>(s)]);
  return spec;
}

HamiltonianSpec open_chain(int n, double t, double tilt, int N) {
  if (n < 2) throw ConfigError("chain needs at least 2 sites");
  if (n % 2 != 0)
    throw ConfigError("chain length must be even (it sets L1)");
  HamiltonianSpec spec;
  spec.name = "open_chain";
  spec.lattice = {n, 2};
  spec.lattice.validate();
  spec.N = N;
  for (int x = 0; x + 1 < n; ++x)
    spec.hoppings.add(spec.lattice.index({x + 1, 0}),
                      spec.lattice.index({x, 0}), cplx(-t, 0));
  if (tilt != 0)
    for (int x = 0; x < n; ++x)
      spec.interactions.add_onsite(spec.lattice.index({x, 0}), tilt * x);
  return spec;
}

HamiltonianSpec two_well_insulator(double t, double v_nn) {
  std::map<int, double> onsite;
  LatticeSpec lat{4, 3};
  for (int s = 0; s < lat.n_sites(); ++s) {
    Site x = lat.site(s);
    onsite[s] = 0.35 * x.x1 + 0.22 * x.x2;
  }
  onsite[lat.index({0, 0})] -= 3.0;
  onsite[lat.index({2, 1})] -= 2.6;
  HamiltonianSpec spec = hofstadter_hubbard(4, 3, 1, 4, t, v_nn, 2, onsite);
  spec.name = "two_well_insulator";
  return spec;
}

HamiltonianSpec correlation_probe_model(double t, double well_depth) {
  // Not a uniform-flux model (4 does not divide 6): the x1-dependent bond
  // phases only serve to remove accidental symmetries, so the hoppings are
  // assembled directly instead of via the hofstadter preset.
  HamiltonianSpec spec;
  spec.name = "correlation_probe_model";
  spec.lattice = {6, 4};
  spec.lattice.validate();
  spec.N = 2;
  add_hofstadter_hops(spec, 1, 4, t);
  add_nn_interactions(spec, 0.4);
  const LatticeSpec& lat = spec.lattice;
  for (int s = 0; s < lat.n_sites(); ++s) {
    Site x = lat.site(s);
    spec.interactions.add_onsite(s, 0.035 * x.x1 + 0.021 * x.x2);
  }
  spec.interactions.add_onsite(lat.index({0, 0}), -well_depth);
  spec.interactions.add_onsite(lat.index({1, 2}), -30.0);
  return spec;
}

}  // namespace halled
