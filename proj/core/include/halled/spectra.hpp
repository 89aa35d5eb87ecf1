#pragma once

#include <Eigen/Dense>
#include <optional>

#include "halled/operators.hpp"

namespace halled {

struct EigensolveOptions {
  int dense_threshold = 4096;  // full solves refuse above this dimension
  int dense_fallback = 256;    // lowest-m uses the dense path up to here
  double tol = 1e-10;          // residual tolerance relative to ||H|| estimate
  int max_basis = 64;          // thick-restart working-subspace limit
  int max_restarts = 600;
  std::uint64_t seed = 0x48414c4c45443031ull;  // start-vector seed, fixed
};

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXcd eigenvectors;  // orthonormal columns, one per eigenvalue
  bool full = false;              // whole spectrum vs lowest-m

  int count() const { return static_cast<int>(eigenvalues.size()); }
  int dim() const { return static_cast<int>(eigenvectors.rows()); }

  // Diagnostics used by tests: worst residual ||Hv - lambda v|| and worst
  // orthonormality defect max|V^dag V - I|.
  double max_residual(const SparseOperator& h) const;
  double max_orthonormality_defect() const;
};

// Dense full decomposition; throws ResourceError above dense_threshold and
// ConfigError when the hermitian flag is unset.
EigenDecomposition eigensolve_full(const SparseOperator& h,
                                   const EigensolveOptions& opts = {});

// Lowest-m pairs. Small problems fall back to the dense path; larger ones run
// a thick-restart block Lanczos with full reorthogonalization and a seeded
// deterministic start block.
EigenDecomposition eigensolve_lowest(const SparseOperator& h, int m,
                                     const EigensolveOptions& opts = {});

// Lowest q levels forming a quasi-degenerate multiplet, with the gap above.
struct GroundMultiplet {
  int q = 0;
  Eigen::VectorXd energies;  // the q multiplet energies, ascending
  Eigen::MatrixXcd frame;    // dim x q orthonormal
  double spread = 0;         // max |E_{0,m} - E_{0,m'}| within the multiplet
  double gap = 0;            // E_q - E_{q-1}, the gap above the multiplet
};

// Hinted mode validates gap/spread >= ratio_threshold for q_hint levels.
// Unhinted mode picks the smallest q <= q_max maximizing the ratio
// (E_q - E_{q-1}) / spread(first q); throws MultipletError when no candidate
// clears the threshold.
GroundMultiplet detect_multiplet(const EigenDecomposition& eig,
                                 std::optional<int> q_hint,
                                 double ratio_threshold = 10.0,
                                 int q_max = 8);

// P0 = sum_m |phi_m><phi_m| as an explicit sparse matrix (small dims only).
SparseOperator projector(const GroundMultiplet& m);

// omega_0(A) = (1/q) sum_m <phi_m|A|phi_m>.
cplx multiplet_expectation(const SparseOperator& a, const GroundMultiplet& m);

}  // namespace halled
