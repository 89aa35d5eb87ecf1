#pragma once

#include <map>
#include <string>

#include "halled/operators.hpp"

namespace halled {

// A complete model instance: lattice, particle number, hoppings and
// density-density interactions. Presets below are pure functions of their
// parameters.
struct HamiltonianSpec {
  std::string name;
  LatticeSpec lattice;
  int N = 0;
  HoppingSet hoppings;
  InteractionSet interactions;

  SparseOperator build(const FockBasis& basis,
                       const TwistConfig& tc = {}) const {
    return build_hamiltonian(lattice, apply_twist(lattice, hoppings, tc),
                             interactions, basis);
  }
};

// Magnetic nearest-neighbor hopping in Landau gauge: amplitude -t along
// direction 1; the direction-2 transfer from (x1, x2+1) down to (x1, x2)
// carries -t * exp(2 pi i (n/m) x1). Requires m | L1 so the magnetic cell
// fits the torus (total flux is then an integer).
HamiltonianSpec hofstadter(int L1, int L2, int flux_num, int flux_den,
                           double t);

// Hofstadter hoppings plus nearest-neighbor density-density coupling V and
// optional onsite potentials (site index -> energy), fixed particle number.
HamiltonianSpec hofstadter_hubbard(int L1, int L2, int flux_num, int flux_den,
                                   double t, double v_nn, int N,
                                   const std::map<int, double>& onsite = {});

// Zero hoppings, onsite potentials only. When unique_ground is requested the
// N lowest potentials must be strictly separated from the (N+1)-th.
HamiltonianSpec atomic_insulator(int L1, int L2,
                                 const std::vector<double>& potentials, int N,
                                 bool unique_ground = true);

// Open n-site chain embedded in the x2 = 0 row of an n x 2 torus: hopping -t
// between chain neighbors (no wrap bond), a small linear tilt to break
// degeneracies, N particles. Sites of the chain are (x, 0), x = 0..n-1.
HamiltonianSpec open_chain(int n, double t, double tilt, int N);

// The interacting two-well reference insulator on 4x3 used by the route and
// bound checks: flux 1/4 hopping at amplitude t, linear potential
// 0.35*x1 + 0.22*x2 with wells -3.0 at (0,0) and -2.6 at (2,1),
// nearest-neighbor repulsion V, N = 2.
HamiltonianSpec two_well_insulator(double t = 0.03, double v_nn = 0.5);

// Gapped 6x4 model for correlation-decay scans: flux 1/4 hopping at
// amplitude t, tilt 0.035*x1 + 0.021*x2, probe well -well_depth at (0,0),
// deep spectator well -30 at (1,2), nearest-neighbor V = 0.4, N = 2.
HamiltonianSpec correlation_probe_model(double t = 0.45,
                                        double well_depth = 2.2);

}  // namespace halled
