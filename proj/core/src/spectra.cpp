#include "halled/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "halled/errors.hpp"

namespace halled {

double EigenDecomposition::max_residual(const SparseOperator& h) const {
  double mx = 0;
  for (int i = 0; i < count(); ++i) {
    Eigen::VectorXcd r =
        h.mat * eigenvectors.col(i) - eigenvalues[i] * eigenvectors.col(i);
    mx = std::max(mx, r.norm());
  }
  return mx;
}

double EigenDecomposition::max_orthonormality_defect() const {
  Eigen::MatrixXcd g = eigenvectors.adjoint() * eigenvectors;
  g -= Eigen::MatrixXcd::Identity(count(), count());
  return g.cwiseAbs().maxCoeff();
}

EigenDecomposition eigensolve_full(const SparseOperator& h,
                                   const EigensolveOptions& opts) {
  if (!h.hermitian)
    throw ConfigError("eigensolve requires the hermitian flag");
  if (h.dim() > opts.dense_threshold)
    throw ResourceError("full eigensolve refused: dimension " +
                        std::to_string(h.dim()) + " exceeds dense threshold " +
                        std::to_string(opts.dense_threshold) +
                        "; use a smaller lattice or a lowest-m solve");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
  if (es.info() != Eigen::Success)
    throw ResourceError("dense eigensolver failed to converge");
  EigenDecomposition out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  out.full = true;
  return out;
}

namespace {

// Deterministic standard normals: xorshift-free fixed algorithm. Box-Muller
// over mt19937_64 keeps the stream identical across platforms, unlike
// std::normal_distribution.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2 * M_PI * u2);
    have_ = true;
    return r * std::cos(2 * M_PI * u2);
  }

 private:
  double uniform() {
    // (0,1]: avoids log(0)
    return (static_cast<double>(rng_()) + 1.0) / 18446744073709551616.0;
  }
  std::mt19937_64 rng_;
  bool have_ = false;
  double cached_ = 0;
};

// Orthonormalizes the columns of x against basis (twice, classical
// Gram-Schmidt) and internally via Householder QR; rank-deficient columns
// are replaced with fresh seeded random vectors and re-orthogonalized.
// Columns are normalized up front so the deficiency test is scale-free:
// restart blocks are built from residuals whose norms shrink with
// convergence, and only their direction matters.
Eigen::MatrixXcd orthonormalize_block(const Eigen::MatrixXcd& basis,
                                      Eigen::MatrixXcd x,
                                      NormalStream& noise) {
  const double drop = 1e-8;
  for (int c = 0; c < x.cols(); ++c) {
    const double n = x.col(c).norm();
    if (n > 0) x.col(c) /= n;
  }
  for (int attempt = 0; attempt < 5; ++attempt) {
    if (basis.cols() > 0) {
      x -= basis * (basis.adjoint() * x);
      x -= basis * (basis.adjoint() * x);
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(x);
    Eigen::MatrixXcd r = qr.matrixQR()
                             .topRows(x.cols())
                             .template triangularView<Eigen::Upper>();
    Eigen::MatrixXcd q = qr.householderQ() *
                         Eigen::MatrixXcd::Identity(x.rows(), x.cols());
    bool deficient = false;
    for (int c = 0; c < x.cols(); ++c)
      if (std::abs(r(c, c)) < drop) {
        deficient = true;
        for (int i = 0; i < x.rows(); ++i)
          q(i, c) = cplx(noise.next(), noise.next());
      }
    if (!deficient) return q;
    x = q;
  }
  throw ResourceError("failed to orthonormalize Lanczos expansion block");
}

EigenDecomposition lanczos_lowest(const SparseOperator& h, int m,
                                  const EigensolveOptions& opts) {
  const int dim = h.dim();
  const int b = m;  // block size = wanted pairs; robust for degeneracy
  const int max_basis = std::max(opts.max_basis, 3 * b + 2);
  const int keep = std::max(2 * m, m + b);

  NormalStream noise(opts.seed);
  Eigen::MatrixXcd B(dim, 0), W(dim, 0);
  Eigen::MatrixXcd X(dim, b);
  for (int c = 0; c < b; ++c)
    for (int r = 0; r < dim; ++r)
      X(r, c) = cplx(noise.next(), noise.next());

  double scale = 1.0;
  for (int outer = 0; outer < opts.max_restarts; ++outer) {
    while (B.cols() + b <= max_basis) {
      Eigen::MatrixXcd q = orthonormalize_block(B, X, noise);
      Eigen::MatrixXcd hq = h.mat * q;
      B.conservativeResize(Eigen::NoChange, B.cols() + b);
      B.rightCols(b) = q;
      W.conservativeResize(Eigen::NoChange, W.cols() + b);
      W.rightCols(b) = hq;
      X = hq;
    }
    const int nb = static_cast<int>(B.cols());
    Eigen::MatrixXcd T = B.adjoint() * W;
    T = 0.5 * (T + T.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T);
    if (es.info() != Eigen::Success)
      throw ResourceError("Rayleigh-Ritz solve failed");
    Eigen::VectorXd theta = es.eigenvalues();
    Eigen::MatrixXcd Y = es.eigenvectors();
    scale = std::max({scale, std::abs(theta[0]), std::abs(theta[nb - 1])});

    Eigen::MatrixXcd ritz = B * Y.leftCols(std::min(keep, nb));
    Eigen::MatrixXcd hritz = W * Y.leftCols(std::min(keep, nb));
    Eigen::MatrixXcd resid(dim, m);
    double worst = 0;
    for (int i = 0; i < m; ++i) {
      resid.col(i) = hritz.col(i) - theta[i] * ritz.col(i);
      worst = std::max(worst, resid.col(i).norm());
    }
    if (worst <= opts.tol * scale || nb >= dim) {
      EigenDecomposition out;
      out.eigenvalues = theta.head(m);
      out.eigenvectors = ritz.leftCols(m);
      out.full = false;
      return out;
    }
    // Thick restart: keep the lowest Ritz vectors, expand from the wanted
    // residuals.
    int k = std::min(keep, nb - b);
    B = ritz.leftCols(k).eval();
    W = hritz.leftCols(k).eval();
    X = resid;
  }
  throw ResourceError("iterative eigensolver failed to converge after " +
                      std::to_string(opts.max_restarts) + " restarts");
}

}  // namespace

EigenDecomposition eigensolve_lowest(const SparseOperator& h, int m,
                                     const EigensolveOptions& opts) {
  if (!h.hermitian)
    throw ConfigError("eigensolve requires the hermitian flag");
  if (m < 1 || m > h.dim())
    throw ConfigError("requested eigenpair count out of range");
  if (h.dim() <= opts.dense_fallback || 3 * m + 2 >= h.dim()) {
    EigensolveOptions dense_opts = opts;
    dense_opts.dense_threshold = std::max(opts.dense_threshold, h.dim());
    EigenDecomposition full = eigensolve_full(h, dense_opts);
    EigenDecomposition out;
    out.eigenvalues = full.eigenvalues.head(m);
    out.eigenvectors = full.eigenvectors.leftCols(m);
    out.full = false;
    return out;
  }
  return lanczos_lowest(h, m, opts);
}

GroundMultiplet detect_multiplet(const EigenDecomposition& eig,
                                 std::optional<int> q_hint,
                                 double ratio_threshold, int q_max) {
  const int n = eig.count();
  auto make = [&](int q) {
    GroundMultiplet m;
    m.q = q;
    m.energies = eig.eigenvalues.head(q);
    m.frame = eig.eigenvectors.leftCols(q);
    m.spread = eig.eigenvalues[q - 1] - eig.eigenvalues[0];
    m.gap = eig.eigenvalues[q] - eig.eigenvalues[q - 1];
    return m;
  };
  if (q_hint) {
    int q = *q_hint;
    if (q < 1) throw ConfigError("multiplet hint must be positive");
    if (n < q + 1)
      throw ConfigError("multiplet detection needs at least q+1 eigenvalues");
    GroundMultiplet m = make(q);
    if (!(m.gap > 0) || m.gap < ratio_threshold * m.spread)
      throw MultipletError(
          "no gapped multiplet: q=" + std::to_string(q) +
          " gap=" + std::to_string(m.gap) +
          " spread=" + std::to_string(m.spread) + " fails ratio " +
          std::to_string(ratio_threshold));
    return m;
  }
  if (n < 2)
    throw ConfigError("multiplet detection needs at least 2 eigenvalues");
  const double floor = 1e-6 * std::max(1.0, std::abs(eig.eigenvalues[0]));
  int best_q = 0;
  double best_ratio = -1;
  for (int q = 1; q <= std::min(q_max, n - 1); ++q) {
    double spread = eig.eigenvalues[q - 1] - eig.eigenvalues[0];
    double gap = eig.eigenvalues[q] - eig.eigenvalues[q - 1];
    double ratio = gap / std::max(spread, floor);
    if (ratio > best_ratio + 1e-12) {
      best_ratio = ratio;
      best_q = q;
    }
  }
  if (best_ratio < ratio_threshold)
    throw MultipletError("no gapped multiplet: best ratio " +
                         std::to_string(best_ratio) + " below threshold " +
                         std::to_string(ratio_threshold));
  return make(best_q);
}

SparseOperator projector(const GroundMultiplet& m) {
  if (m.frame.rows() > 4096)
    throw ResourceError("explicit projector refused above dimension 4096");
  Eigen::MatrixXcd p = m.frame * m.frame.adjoint();
  return SparseOperator::from_dense(p, true);
}

cplx multiplet_expectation(const SparseOperator& a, const GroundMultiplet& m) {
  if (a.dim() != m.frame.rows())
    throw ConfigError("operator and multiplet dimensions disagree");
  Eigen::MatrixXcd aq = a.mat * m.frame;
  return (m.frame.adjoint() * aq).trace() / static_cast<double>(m.q);
}

}  // namespace halled
