#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "halled/spectra.hpp"

namespace halled {

// A current across a cut line; optionally restricted to a row window
// (direction-1 cuts only) or deformed by alpha * i[H, n_x].
struct CurrentSpec {
  int dir = 1;
  int k = 0;
  // (center row l, half-width Nw): both bond endpoints must satisfy
  // l - Nw <= x2 <= l + Nw (mod L2). A window covering every row saturates
  // to the plain current.
  std::optional<std::pair<int, int>> window;
  // (alpha, site): adds i*alpha*[H, n_site].
  std::optional<std::pair<double, int>> deformation;
};

// i * sum over cut-crossing bonds of cross(x->y) t_xy c^dag_x c_y, which is
// dH/dphi for the twist convention in apply_twist. Ignores window/deformation.
SparseOperator local_current(const LatticeSpec& lat, const HoppingSet& hops,
                             const CurrentSpec& spec, const FockBasis& basis);

// Same bond sum with both endpoints inside the row window.
SparseOperator windowed_current(const LatticeSpec& lat,
                                const HoppingSet& hops,
                                const CurrentSpec& spec,
                                const FockBasis& basis);

// Plain current plus i*alpha*[H, n_x].
SparseOperator deformed_current(const LatticeSpec& lat,
                                const HoppingSet& hops,
                                const CurrentSpec& spec,
                                const SparseOperator& h,
                                const FockBasis& basis);

// Diagonal charge sum_{x in region} n_x.
SparseOperator region_charge(const Region& region, const LatticeSpec& lat,
                             const FockBasis& basis);

// Heisenberg evolution A(z) = e^{iHz} A e^{-iHz} through the full spectrum;
// real z is unitary, z = i*s gives the e^{-(E_n - E_m)s} weights. Throws
// ResourceError when an imaginary-time exponent would overflow.
SparseOperator heisenberg(const SparseOperator& a,
                          const EigenDecomposition& eig, cplx z);

// Same evolution applied to an operator already expressed in the eigenbasis.
Eigen::MatrixXcd heisenberg_eigenbasis(const Eigen::MatrixXcd& a_eig,
                                       const Eigen::VectorXd& energies,
                                       cplx z);

// <<A;B>> = (1/q) sum_m sum_{n not in multiplet}
//   <0m|A|n> (E_{0m} - E_n)^{-2} <n|B|0m>,
// with the multiplet being the first q states of the full decomposition.
cplx corr(const SparseOperator& a, const SparseOperator& b,
          const GroundMultiplet& m, const EigenDecomposition& eig);

struct FilterSpec {
  SparseOperator a0;
  double K = 4.0;        // Gaussian width parameter
  double center = 0.0;   // energy-window center offset
  std::optional<double> T1;                 // time cutoff for the truncation
  std::optional<std::vector<int>> omega;    // sites generating the restricted
                                            // evolution used for a(T1)
};

struct FilterResult {
  SparseOperator filtered;                   // exact spectral form
  std::optional<SparseOperator> truncated;   // a(T1) by time quadrature
  double deviation = 0;   // ||filtered - truncated||
  double bound = 0;       // ||a0|| exp(-T1^2 / (2K))
  double quad_error = 0;  // Richardson estimate for the quadrature
};

// Gaussian energy filter: matrix elements multiplied by
// exp[-K (E_n - E_m - center)^2 / 2]. With T1 set, also evaluates the
// truncated time integral over [-T1, T1] (400 trapezoid intervals) and
// reports its deviation against the Gaussian-tail bound. When omega is set
// the truncated evolution is generated by the omega-restricted Hamiltonian,
// whose decomposition must be supplied.
FilterResult energy_filter(const FilterSpec& fs,
                           const EigenDecomposition& eig,
                           const EigenDecomposition* restricted_eig = nullptr);

// omega_0(a^dag (1-P0) [H,a]) / omega_0(a^dag (1-P0) a); real part returned.
// Throws ToleranceError when the denominator vanishes (no excitation).
double excitation_ratio(const SparseOperator& a, const SparseOperator& h,
                        const GroundMultiplet& m);

struct EvolutionGapReport {
  std::vector<double> t;
  std::vector<double> lhs;  // ||A_full(t) - A_omega(t)||
  std::vector<double> rhs;  // integral of ||[(H - H_omega), A_omega(s)]||
  bool pass = false;        // lhs <= rhs * (1 + slack) + eps pointwise
  double slack = 0.05;
};

// Compares evolution under the full Hamiltonian with evolution under the
// omega-restricted one, against the Duhamel integral bound evaluated on a
// refined trapezoid grid. A must be supported inside omega.
EvolutionGapReport restricted_evolution_gap(
    const SparseOperator& a, const SparseOperator& h_full,
    const SparseOperator& h_omega, const FockBasis& basis,
    const std::vector<int>& omega_sites, const std::vector<double>& t_grid);

struct LRProbe {
  SparseOperator a;  // source observable
  SparseOperator b;  // probe observable at the given separation
  double distance = 0;
};

struct LRSample {
  double distance, t, norm, saturation;  // saturation = 2 ||A|| ||B||
};

// Light-cone envelope fitted to commutator growth samples:
// log||[A(t),B]|| <= log C + log(e^{vt} - 1) - mu * dist.
struct LREnvelope {
  double C = 0, mu = 0, v = 0;
  double r2 = 0;  // fit quality on the pre-saturation window
  std::vector<LRSample> samples;
};

LREnvelope commutator_growth(const std::vector<LRProbe>& probes,
                             const EigenDecomposition& eig,
                             const std::vector<double>& t_grid);

}  // namespace halled
