#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "halled/models.hpp"
#include "halled/observables.hpp"

namespace halled {

class EigenCache;

struct BoundCheck {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};

// ---------------------------------------------------------------------------
// Spectral-sum route
// ---------------------------------------------------------------------------

// (i/q) sum_m sum_{n>=q} [<0m|J1|n><n|J2|0m> - <0m|J2|n><n|J1|0m>]
//   / (E_{0m} - E_n)^2 with the multiplet being the first q states of the
// full decomposition. Exactly antisymmetric under J1 <-> J2. Throws
// MultipletError below the gap floor and ToleranceError if the imaginary
// residue exceeds imag_tol.
double kubo_sum(const SparseOperator& j1, const SparseOperator& j2,
                const GroundMultiplet& m, const EigenDecomposition& eig,
                double gap_floor = 1e-12, double imag_tol = 1e-10);

// Grid average of kubo_sum over twist angles (2 pi i / n, 2 pi j / n) with
// step cuts at k1, k2. Full spectrum per node, so small dimensions only.
double kubo_average(const HamiltonianSpec& spec, const FockBasis& basis,
                    int k1, int k2, int n_phi, int q,
                    const EigensolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Projector-commutator route
// ---------------------------------------------------------------------------

// (i/q) Tr P0 [dP/dphi1, dP/dphi2] with central differences at step h. The
// trace is evaluated through q x q frame overlaps, never dim x dim
// projectors. build_at returns the Hamiltonian at given twist angles.
// Throws MultipletError when the q-th gap closes at any stencil point.
double projector_trace(
    const std::function<SparseOperator(double, double)>& build_at,
    double phi1, double phi2, int q, double h = 1e-4,
    const EigensolveOptions& opts = {}, double gap_floor = 1e-9);

// ---------------------------------------------------------------------------
// Time-domain (adiabatic response) route
// ---------------------------------------------------------------------------

// Closed form of int_{-T}^0 s e^{eta s} e^{-i delta s} ds. T = nullopt is
// the T -> infinity limit; eta = 0, T = infinity requires |delta| > 0.
cplx switch_on_integral(double delta, double eta, std::optional<double> T);

struct TimeDomainParams {
  double eta = 0.05;
  std::optional<double> T = 100.0;  // nullopt: infinite switch-on time
  // Geometry used by time_domain_conductance to build the operators:
  int window_halfwidth = -1;  // current row window; negative = whole torus
  int region_halfwidth = 1;   // charge-region half-width M
  int k = 0;                  // direction-1 cut column
  int l = 0;                  // row anchor shared by window and region
};

struct TimeDomainReport {
  double sigma = 0;        // value at (eta, T)
  double sigma_limit = 0;  // value at eta = 0, T = infinity
  double correction = 0;   // |finite-eta correction term|
  double persistent_current = 0;  // multiplet expectation of the current
  std::vector<BoundCheck> checks;
  std::vector<std::string> warnings;
};

// sigma(eta,T) = i int_{-T}^0 ds s e^{eta s} w0([J_window, J(region; s)])
// evaluated per eigenpair with the exact antiderivative, where
// J(region; s) is the Heisenberg evolution of i[H, chi] and chi the region
// charge. Also reports the eta = 0, T = infinity limit, the finite-eta
// correction with its 2 eta / gap^2 * ||chi|| ||J|| bound, and the
// adiabatic deviation |sigma(eta,T) - sigma(0,inf)| against
//   2 [ ((2 gap + eta)/gap^4) eta + ((1 + T gap)/gap^2) e^{-eta T} ]
//     * ||J_window|| * ||i[H,chi]||.
TimeDomainReport time_domain(const SparseOperator& j_window,
                             const SparseOperator& chi,
                             const SparseOperator& h,
                             const TimeDomainParams& params,
                             const GroundMultiplet& m,
                             const EigenDecomposition& eig);

// Builds the windowed current and region charge from params for the twisted
// model and runs time_domain. eig must decompose spec.build(basis, tc).
TimeDomainReport time_domain_conductance(const HamiltonianSpec& spec,
                                         const FockBasis& basis,
                                         const TwistConfig& tc,
                                         const TimeDomainParams& params,
                                         const GroundMultiplet& m,
                                         const EigenDecomposition& eig);

// ---------------------------------------------------------------------------
// Flux-torus averaging (overlap-determinant curvature)
// ---------------------------------------------------------------------------

struct NodeData {
  Eigen::MatrixXcd frame;    // dim x q multiplet frame
  Eigen::VectorXd energies;  // the levels actually solved, ascending
  double gap = 0;            // E_q - E_{q-1}
  double spread = 0;         // E_{q-1} - E_0
  bool persists = true;      // multiplet separation held at this node
  bool from_cache = false;
  bool verified = false;  // cache hit re-solved and spot-checked
};

// Supplies the q-frame at grid node (i, j) with angles (phi1, phi2). When a
// cut is deformed, H(phi + 2 pi) is a diagonal conjugation of H(phi); the
// seam vectors are those diagonals, applied to wrap the frames at 2 pi.
struct FrameProvider {
  int q = 1;
  std::function<NodeData(int i, int j, double phi1, double phi2)> node;
  std::optional<Eigen::VectorXcd> seam1, seam2;
};

struct FluxGridOptions {
  int n_phi = 12;
  double link_floor = 1e-8;       // singular-link threshold on |det overlap|
  double integrality_tol = 1e-9;  // |sum F / 2 pi - round(.)| allowed
  bool allow_refine = true;       // one doubling on singular link / residual
  bool keep_frames = false;
  int workers = 1;
};

struct PlaquetteField {
  int i = 0, j = 0;
  double phi1 = 0, phi2 = 0;
  double f = 0;  // plaquette field strength, in (-pi, pi]
};

struct ReductionResult {
  int p = 0;
  double residual = 0;
  double min_link = 1;
  bool singular = false;
  std::string message;
  std::vector<PlaquetteField> curvature;
};

// Plaquette reduction of stored frames (row-major i * n_phi + j). Pure and
// reusable: deformation and gauge checks re-run it on transformed frames.
ReductionResult reduce_frames(const std::vector<Eigen::MatrixXcd>& frames,
                              int n_phi, int q,
                              const std::optional<Eigen::VectorXcd>& seam1,
                              const std::optional<Eigen::VectorXcd>& seam2,
                              double link_floor = 1e-8);

struct FluxAverage {
  int p = 0;
  int q = 1;
  double residual = 0;
  double sigma_averaged = 0;  // p / (2 pi q)
  int n_phi = 0;              // grid actually used
  bool refined = false;
  double min_gap = 0;
  double max_spread = 0;
  double min_link = 0;
  bool q_constant = true;  // multiplet separation held at every node
  std::vector<PlaquetteField> curvature;
  std::vector<double> node_gaps;     // row-major n_phi x n_phi
  std::vector<double> node_spreads;  // row-major n_phi x n_phi
  std::vector<Eigen::MatrixXcd> frames;  // filled when keep_frames
  std::optional<Eigen::VectorXcd> seam1, seam2;
  int cache_hits = 0, cache_misses = 0, cache_verified = 0;
};

// Solves every grid node through the provider, reduces to the integer p and
// sigma_averaged = p / (2 pi q). On a singular link or an integrality
// failure the grid is refined once (doubled) when allowed, else
// ToleranceError. Gap closure at a node raises MultipletError.
FluxAverage average_over_flux(const FrameProvider& provider,
                              const FluxGridOptions& opts);

struct ProviderOptions {
  int q = 1;        // multiplet size (fix via detect_at for auto-detection)
  int n_extra = 1;  // extra levels above q solved to expose the gap
  int k1 = 0, k2 = 0;  // step-cut columns
  std::optional<CutFunction> cut1;  // overrides the direction-1 step cut
  std::optional<CutFunction> cut2;  // overrides the direction-2 step cut
  double gap_floor = 1e-10;
  EigensolveOptions eig;
  EigenCache* cache = nullptr;  // optional, borrowed
};

// Node solver for a model: twisted Hamiltonian, lowest q + n_extra levels,
// frame extraction, optional disk cache with 1-in-16 spot re-verification
// of warm nodes. spec and basis are borrowed and must outlive the provider.
FrameProvider make_flux_provider(const HamiltonianSpec& spec,
                                 const FockBasis& basis,
                                 const ProviderOptions& po);

// Multiplet detection at one twist point: full solve when the dimension
// allows, else the lowest solve_count levels.
GroundMultiplet detect_at(const HamiltonianSpec& spec, const FockBasis& basis,
                          const TwistConfig& tc, std::optional<int> q_hint,
                          const EigensolveOptions& opts = {},
                          int solve_count = 10);

// ---------------------------------------------------------------------------
// Deformation invariance
// ---------------------------------------------------------------------------

struct DeformationCheck {
  std::string label;
  int p = 0;
  double residual = 0;
  bool pass = false;  // p equals the reference integer
};

// Re-reduces the stored frames of `base` under the onsite deformation of
// strength alpha at `site`: frames pick up exp(-i alpha phi1 n_site) and the
// phi1 = 2 pi seam becomes exp(-i alpha 2 pi n_site) (composed with any
// existing seam). No re-solving; requires base.frames (keep_frames).
std::vector<DeformationCheck> deformation_invariance(
    const FluxAverage& base, const FockBasis& basis, int site,
    const std::vector<double>& alphas, double link_floor = 1e-8);

// Full re-solve with a deformed direction-1 cut (same grid as base) and
// comparison of the resulting integer against base.p.
DeformationCheck deformed_cut_invariance(const HamiltonianSpec& spec,
                                         const FockBasis& basis,
                                         const FluxAverage& base,
                                         const CutFunction& cut1,
                                         const ProviderOptions& po,
                                         const FluxGridOptions& go);

// Diagonal seam phases exp(sign * i * 2 pi * sum_s delta(s) n_s) for a
// deformed cut, evaluated over the basis.
Eigen::VectorXcd deformed_cut_seam(const CutFunction& cut,
                                   const LatticeSpec& lat,
                                   const FockBasis& basis, int sign);

// ---------------------------------------------------------------------------
// Single-particle oracle
// ---------------------------------------------------------------------------

// Chern number of one magnetic Bloch band of the Landau-gauge hopping model
// at flux flux_num/flux_den, from a mesh x mesh curvature sum over the
// reduced zone [0, 2 pi / m) x [0, 2 pi). Oracle for the filled-lowest-band
// many-body invariant.
int band_chern(int flux_num, int flux_den, int band = 0, int mesh = 64,
               double* residual = nullptr);

// ---------------------------------------------------------------------------
// Aggregated report
// ---------------------------------------------------------------------------

struct ConductanceReport {
  double phi1 = 0, phi2 = 0;  // twist at which the pointwise routes ran
  double sigma_kubo = 0;
  double sigma_trace = 0;
  double sigma_time = 0;
  int p = 0;
  int q = 1;
  double sigma_averaged = 0;
  std::vector<BoundCheck> checks;
};

}  // namespace halled
