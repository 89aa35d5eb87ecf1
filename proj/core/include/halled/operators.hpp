#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "halled/fock.hpp"
#include "halled/lattice.hpp"

namespace halled {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

// Sector-restricted sparse operator. The hermitian flag is a promise made at
// construction; validate_hermitian() measures the actual defect.
struct SparseOperator {
  SpMat mat;
  bool hermitian = false;

  int dim() const { return static_cast<int>(mat.rows()); }

  // Builds from triplets (duplicates summed), dropping entries below
  // prune_tol in magnitude. When hermitian is requested the defect is
  // checked against 1e-12 * max|entry|.
  static SparseOperator from_triplets(int dim, std::vector<Triplet>& trips,
                                      bool hermitian,
                                      double prune_tol = 1e-15);
  static SparseOperator from_dense(const Eigen::MatrixXcd& dense,
                                   bool hermitian,
                                   double prune_tol = 1e-15);
  static SparseOperator diagonal(const std::vector<double>& entries);
  static SparseOperator zero(int dim);
  static SparseOperator identity(int dim);

  double hermiticity_defect() const;  // max entry of |A - A^dag|
  void validate_hermitian(double tol = 1e-12) const;
  Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(mat); }
  double max_abs() const;
};

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator*(cplx s, const SparseOperator& a);

// Spectral norm (largest singular value) by power iteration on A^dag A,
// deterministic start vector, relative tolerance tol on the estimate.
double operator_norm(const SpMat& a, double tol = 1e-8, int max_iter = 2000);
double operator_norm(const Eigen::MatrixXcd& a, double tol = 1e-8,
                     int max_iter = 2000);
inline double operator_norm(const SparseOperator& a, double tol = 1e-8,
                            int max_iter = 2000) {
  return operator_norm(a.mat, tol, max_iter);
}

// Hopping amplitudes t_xy for terms t_xy c^dag_x c_y; both orientations are
// stored and kept conjugate. Diagonal entries (x == x) are onsite energies.
struct HoppingSet {
  std::map<std::pair<int, int>, cplx> entries;
  int range = 1;  // max periodic distance of any stored bond

  // Adds t at (x,y) and conj(t) at (y,x); accumulates into existing entries.
  void add(int x, int y, cplx t);
  void add_onsite(int x, double u) { entries[{x, x}] += u; }
  cplx at(int x, int y) const;
  void validate(const LatticeSpec& lat) const;
};

struct Interaction {
  std::vector<int> sites;  // distinct site indices
  double u = 0;
};

// Density products u * n_{x1} ... n_{xI}; couplings are real by type.
struct InteractionSet {
  std::vector<Interaction> terms;
  int range = 1;  // max periodic diameter of any term's site set

  void add(std::vector<int> sites, double u);
  void add_onsite(int x, double u) { add({x}, u); }
  void validate(const LatticeSpec& lat) const;
};

// One flux angle threaded through a cut line. The cut may be the plain step
// or a deformed cut agreeing with the step away from its anchor.
struct Twist {
  int dir = 1;
  double phi = 0;
  CutFunction cut;
};

struct TwistConfig {
  std::vector<Twist> twists;

  static TwistConfig none() { return {}; }
  // Step cuts at positions k1, k2 with angles phi1, phi2.
  static TwistConfig plain(int k1, double phi1, int k2, double phi2);
  void validate() const;  // at most one twist per direction
};

// Multiplies every bond amplitude by exp[i phi (cross(x->y) + d(y) - d(x))]
// per twist, where cross is the signed cut crossing and d the cut's
// deviation from the step. Hermiticity is preserved exactly.
HoppingSet apply_twist(const LatticeSpec& lat, const HoppingSet& hops,
                       const TwistConfig& tc);

// H = sum t_xy c^dag_x c_y + sum u n_{x1}..n_{xI} on the N-sector.
SparseOperator build_hamiltonian(const LatticeSpec& lat,
                                 const HoppingSet& hops,
                                 const InteractionSet& ints,
                                 const FockBasis& basis);

// Diagonal operator sum_x f(x) n_x for a cut function f.
SparseOperator diagonal_from_cut(const CutFunction& f, const LatticeSpec& lat,
                                 const FockBasis& basis);

// Diagonal operator sum_x w(x) n_x for per-site weights.
SparseOperator diagonal_from_weights(const std::vector<double>& w,
                                     const FockBasis& basis);

// Per-basis-state occupation of one site, as a real vector of 0/1.
Eigen::VectorXd occupation_vector(const FockBasis& basis, int site);

// Diagonal phases exp[i phi * (number of occupied sites with x^(dir)=k-1)]:
// the unitary G with G H_{cut k-1}(phi) G^dag = H_{cut k}(phi), i.e. it moves
// a twist cut forward from column k-1 to column k.
Eigen::VectorXcd gauge_phases(const LatticeSpec& lat, const FockBasis& basis,
                              int dir, int k, double phi);

// Conjugation G A G^dag by the gauge-move unitary.
SparseOperator gauge_move(const SparseOperator& a, const LatticeSpec& lat,
                          const FockBasis& basis, int dir, int k, double phi);
// G v for state vectors.
Eigen::VectorXcd gauge_move(const Eigen::VectorXcd& v, const LatticeSpec& lat,
                            const FockBasis& basis, int dir, int k,
                            double phi);

// Drops hopping terms and interactions touching any site outside the set.
HoppingSet restrict_hops(const HoppingSet& hops,
                         const std::vector<int>& sites);
InteractionSet restrict_ints(const InteractionSet& ints,
                             const std::vector<int>& sites);

}  // namespace halled
