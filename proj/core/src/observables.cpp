#include "halled/observables.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_set>

#include "halled/errors.hpp"

namespace halled {

namespace {

int pmod(int a, int m) {
  int r = a % m;
  return r < 0 ? r + m : r;
}

bool row_in_window(const LatticeSpec& lat, int site, int l, int nw) {
  if (2 * nw + 1 >= lat.L2) return true;  // saturated window
  int x2 = lat.coord(2, site);
  return pmod(x2 - (l - nw), lat.L2) <= 2 * nw;
}

SparseOperator current_from_bonds(const LatticeSpec& lat,
                                  const HoppingSet& hops,
                                  const CurrentSpec& spec,
                                  const FockBasis& basis, bool windowed) {
  if (windowed && spec.dir != 1)
    throw ConfigError("row windows only apply to direction-1 currents");
  std::map<std::pair<int, int>, cplx> bonds;
  for (const auto& [key, t] : hops.entries) {
    auto [x, y] = key;
    if (x == y) continue;
    int c = cut_crossing(lat, spec.dir, spec.k, x, y);
    if (c == 0) continue;
    if (windowed) {
      auto [l, nw] = *spec.window;
      if (!row_in_window(lat, x, l, nw) || !row_in_window(lat, y, l, nw))
        continue;
    }
    bonds[key] += cplx(0, static_cast<double>(c)) * t;
  }
  std::vector<Triplet> trips;
  for (int r = 0; r < basis.dim(); ++r) {
    std::uint64_t mask = basis.masks[static_cast<std::size_t>(r)];
    for (const auto& [key, t] : bonds) {
      auto he = matrix_element_hop(mask, key.first, key.second);
      if (!he) continue;
      trips.emplace_back(basis.index_of(he->mask), r,
                         t * static_cast<double>(he->sign));
    }
  }
  return SparseOperator::from_triplets(basis.dim(), trips, true);
}

}  // namespace

SparseOperator local_current(const LatticeSpec& lat, const HoppingSet& hops,
                             const CurrentSpec& spec, const FockBasis& basis) {
  return current_from_bonds(lat, hops, spec, basis, false);
}

SparseOperator windowed_current(const LatticeSpec& lat,
                                const HoppingSet& hops,
                                const CurrentSpec& spec,
                                const FockBasis& basis) {
  if (!spec.window) throw ConfigError("windowed current needs a window");
  return current_from_bonds(lat, hops, spec, basis, true);
}

SparseOperator deformed_current(const LatticeSpec& lat,
                                const HoppingSet& hops,
                                const CurrentSpec& spec,
                                const SparseOperator& h,
                                const FockBasis& basis) {
  if (!spec.deformation)
    throw ConfigError("deformed current needs a deformation");
  if (spec.dir != 1)
    throw ConfigError("deformations only apply to direction-1 currents");
  auto [alpha, site] = *spec.deformation;
  SparseOperator j = local_current(lat, hops, spec, basis);
  Eigen::VectorXd occ = occupation_vector(basis, site);
  // i*alpha*[H, n_x]: columns scaled by occ on the right, rows on the left.
  SpMat hn = h.mat * occ.cast<cplx>().asDiagonal();
  SpMat nh = occ.cast<cplx>().asDiagonal() * h.mat;
  SparseOperator out;
  out.mat = j.mat + cplx(0, alpha) * (hn - nh);
  out.hermitian = true;
  out.mat.prune([](int, int, const cplx& v) { return std::abs(v) > 1e-15; });
  return out;
}

SparseOperator region_charge(const Region& region, const LatticeSpec& lat,
                             const FockBasis& basis) {
  std::vector<double> w(static_cast<std::size_t>(lat.n_sites()), 0.0);
  for (int s : region.sites(lat)) w[static_cast<std::size_t>(s)] = 1.0;
  return diagonal_from_weights(w, basis);
}

Eigen::MatrixXcd heisenberg_eigenbasis(const Eigen::MatrixXcd& a_eig,
                                       const Eigen::VectorXd& energies,
                                       cplx z) {
  const int n = static_cast<int>(energies.size());
  double max_im = std::abs(std::imag(z));
  if (max_im > 0) {
    double spread = energies[n - 1] - energies[0];
    if (max_im * spread > 700.0)
      throw ResourceError("imaginary-time exponent " +
                          std::to_string(max_im * spread) +
                          " would overflow");
  }
  Eigen::MatrixXcd out(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r)
      out(r, c) = a_eig(r, c) *
                  std::exp(cplx(0, 1) * (energies[r] - energies[c]) * z);
  return out;
}

SparseOperator heisenberg(const SparseOperator& a,
                          const EigenDecomposition& eig, cplx z) {
  if (!eig.full)
    throw ConfigError("heisenberg evolution needs the full spectrum");
  if (a.dim() != eig.dim())
    throw ConfigError("operator and spectrum dimensions disagree");
  Eigen::MatrixXcd a_eig =
      eig.eigenvectors.adjoint() * a.mat * eig.eigenvectors;
  Eigen::MatrixXcd evolved =
      eig.eigenvectors *
      heisenberg_eigenbasis(a_eig, eig.eigenvalues, z) *
      eig.eigenvectors.adjoint();
  return SparseOperator::from_dense(evolved,
                                    a.hermitian && std::imag(z) == 0.0);
}

cplx corr(const SparseOperator& a, const SparseOperator& b,
          const GroundMultiplet& m, const EigenDecomposition& eig) {
  if (!eig.full) throw ConfigError("corr needs the full spectrum");
  if (!(m.gap > 0)) throw MultipletError("corr needs a positive gap");
  const int n = eig.count();
  const int q = m.q;
  Eigen::MatrixXcd excited = eig.eigenvectors.rightCols(n - q);
  Eigen::MatrixXcd a_me = m.frame.adjoint() * (a.mat * excited);
  Eigen::MatrixXcd b_em = excited.adjoint() * (b.mat * m.frame);
  cplx acc(0, 0);
  for (int mm = 0; mm < q; ++mm)
    for (int nn = 0; nn < n - q; ++nn) {
      double den = m.energies[mm] - eig.eigenvalues[q + nn];
      acc += a_me(mm, nn) * b_em(nn, mm) / (den * den);
    }
  return acc / static_cast<double>(q);
}

namespace {

// Trapezoid quadrature of the windowed time integral in the eigenbasis of
// the generating Hamiltonian, with npts uniform intervals on [-T1, T1].
Eigen::MatrixXcd truncated_filter_quadrature(const Eigen::MatrixXcd& a_gen,
                                             const Eigen::VectorXd& energies,
                                             double K, double center,
                                             double T1, int npts) {
  const int n = static_cast<int>(energies.size());
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i <= npts; ++i) {
    double tv = -T1 + 2 * T1 * i / npts;
    double w = (i == 0 || i == npts) ? 0.5 : 1.0;
    double damp = w * std::exp(-tv * tv / (2 * K));
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r)
        acc(r, c) += damp * a_gen(r, c) *
                     std::exp(cplx(0, (energies[r] - energies[c] - center) *
                                          tv));
  }
  return acc * (2 * T1 / npts) / std::sqrt(2 * M_PI * K);
}

}  // namespace

FilterResult energy_filter(const FilterSpec& fs,
                           const EigenDecomposition& eig,
                           const EigenDecomposition* restricted_eig) {
  if (!eig.full) throw ConfigError("energy filter needs the full spectrum");
  if (!(fs.K > 0)) throw ConfigError("filter width K must be positive");
  const int n = eig.count();
  const Eigen::MatrixXcd& V = eig.eigenvectors;
  Eigen::MatrixXcd a_eig = V.adjoint() * fs.a0.mat * V;
  Eigen::MatrixXcd filt(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) {
      double d = eig.eigenvalues[r] - eig.eigenvalues[c] - fs.center;
      filt(r, c) = a_eig(r, c) * std::exp(-fs.K * d * d / 2);
    }
  FilterResult out;
  out.filtered = SparseOperator::from_dense(V * filt * V.adjoint(), false);

  if (fs.T1) {
    const EigenDecomposition* gen = &eig;
    if (fs.omega) {
      if (!restricted_eig)
        throw ConfigError(
            "omega-restricted truncation needs the restricted decomposition");
      gen = restricted_eig;
      if (gen->dim() > 512)
        throw ResourceError(
            "omega-restricted quadrature refused above dimension 512");
    }
    const Eigen::MatrixXcd& Vg = gen->eigenvectors;
    Eigen::MatrixXcd a_gen = Vg.adjoint() * fs.a0.mat * Vg;
    const int npts = 400;
    Eigen::MatrixXcd fine = truncated_filter_quadrature(
        a_gen, gen->eigenvalues, fs.K, fs.center, *fs.T1, npts);
    Eigen::MatrixXcd coarse = truncated_filter_quadrature(
        a_gen, gen->eigenvalues, fs.K, fs.center, *fs.T1, npts / 2);
    out.quad_error = operator_norm(Eigen::MatrixXcd(fine - coarse)) / 3.0;
    Eigen::MatrixXcd truncated_site = Vg * fine * Vg.adjoint();
    out.truncated = SparseOperator::from_dense(truncated_site, false);
    out.bound = operator_norm(fs.a0) * std::exp(-(*fs.T1) * (*fs.T1) /
                                                (2 * fs.K));
    out.deviation = operator_norm(
        Eigen::MatrixXcd(out.filtered.dense() - truncated_site));
    double tol = std::max(1e-12, 0.05 * out.bound);
    if (out.quad_error > tol)
      throw ToleranceError("filter quadrature too coarse: estimated error " +
                           std::to_string(out.quad_error));
  }
  return out;
}

double excitation_ratio(const SparseOperator& a, const SparseOperator& h,
                        const GroundMultiplet& m) {
  const int q = m.q;
  Eigen::MatrixXcd aq = a.mat * m.frame;           // a|0m>
  Eigen::MatrixXcd hq = h.mat * m.frame;           // H|0m>
  Eigen::MatrixXcd haq = h.mat * aq;               // H a|0m>
  Eigen::MatrixXcd ahq = a.mat * hq;               // a H|0m>
  Eigen::MatrixXcd commq = haq - ahq;              // [H,a]|0m>
  auto project_out = [&](const Eigen::MatrixXcd& z) {
    return (z - m.frame * (m.frame.adjoint() * z)).eval();
  };
  cplx num = (aq.adjoint() * project_out(commq)).trace() /
             static_cast<double>(q);
  cplx den = (aq.adjoint() * project_out(aq)).trace() /
             static_cast<double>(q);
  if (std::abs(den) <= 1e-14)
    throw ToleranceError("perturbation creates no excitation "
                         "(vanishing denominator)");
  return std::real(num / den);
}

namespace {

std::uint64_t site_mask(const std::vector<int>& sites) {
  std::uint64_t m = 0;
  for (int s : sites) m |= (1ull << s);
  return m;
}

void check_support(const SparseOperator& a, const FockBasis& basis,
                   std::uint64_t omega) {
  // Off-diagonal: connected masks must differ only inside omega.
  // Diagonal: entries must not depend on the outside configuration.
  std::map<std::uint64_t, std::pair<std::uint64_t, cplx>> diag_by_inside;
  for (int col = 0; col < a.mat.outerSize(); ++col)
    for (SpMat::InnerIterator it(a.mat, col); it; ++it) {
      std::uint64_t mr = basis.masks[static_cast<std::size_t>(it.row())];
      std::uint64_t mc = basis.masks[static_cast<std::size_t>(col)];
      if ((mr ^ mc) & ~omega)
        throw ConfigError("observable support leaks outside omega");
      if (it.row() == col) {
        auto [pos, ok] = diag_by_inside.try_emplace(
            mc & omega, std::make_pair(mc, it.value()));
        if (!ok && std::abs(pos->second.second - it.value()) > 1e-12)
          throw ConfigError(
              "observable diagonal depends on sites outside omega");
      }
    }
}

}  // namespace

EvolutionGapReport restricted_evolution_gap(
    const SparseOperator& a, const SparseOperator& h_full,
    const SparseOperator& h_omega, const FockBasis& basis,
    const std::vector<int>& omega_sites, const std::vector<double>& t_grid) {
  check_support(a, basis, site_mask(omega_sites));
  EigensolveOptions opts;
  opts.dense_threshold = std::max(4096, a.dim());
  EigenDecomposition ef = eigensolve_full(h_full, opts);
  EigenDecomposition eo = eigensolve_full(h_omega, opts);
  SparseOperator d = h_full - h_omega;

  Eigen::MatrixXcd a_f = ef.eigenvectors.adjoint() * a.mat * ef.eigenvectors;
  Eigen::MatrixXcd a_o = eo.eigenvectors.adjoint() * a.mat * eo.eigenvectors;

  // Integrand g(u) = ||[D, A_omega(u)]|| on a refined grid; the Duhamel
  // right-hand side at t is the integral of g over [0, t].
  const int refine = 4;
  double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  int nfine = refine * std::max<int>(1, static_cast<int>(t_grid.size()) - 1);
  std::vector<double> g(static_cast<std::size_t>(nfine) + 1);
  Eigen::MatrixXcd d_dense = d.mat.toDense();
  for (int i = 0; i <= nfine; ++i) {
    double u = t_max * i / nfine;
    Eigen::MatrixXcd at =
        eo.eigenvectors *
        heisenberg_eigenbasis(a_o, eo.eigenvalues, cplx(u, 0)) *
        eo.eigenvectors.adjoint();
    g[static_cast<std::size_t>(i)] =
        operator_norm(Eigen::MatrixXcd(d_dense * at - at * d_dense));
  }
  auto rhs_at = [&](double t) {
    // trapezoid over [0, t] on the refined grid (t <= t_max)
    double h = t_max / nfine;
    int full_steps = static_cast<int>(std::floor(t / h + 1e-12));
    double acc = 0;
    for (int i = 0; i < full_steps; ++i)
      acc += 0.5 * (g[static_cast<std::size_t>(i)] +
                    g[static_cast<std::size_t>(i) + 1]) * h;
    double rem = t - full_steps * h;
    if (rem > 1e-12 && full_steps < nfine)
      acc += rem * g[static_cast<std::size_t>(full_steps)];
    return acc;
  };

  EvolutionGapReport rep;
  double scale = operator_norm(a);
  for (double t : t_grid) {
    Eigen::MatrixXcd at_full =
        ef.eigenvectors *
        heisenberg_eigenbasis(a_f, ef.eigenvalues, cplx(t, 0)) *
        ef.eigenvectors.adjoint();
    Eigen::MatrixXcd at_om =
        eo.eigenvectors *
        heisenberg_eigenbasis(a_o, eo.eigenvalues, cplx(t, 0)) *
        eo.eigenvectors.adjoint();
    rep.t.push_back(t);
    rep.lhs.push_back(operator_norm(Eigen::MatrixXcd(at_full - at_om)));
    rep.rhs.push_back(rhs_at(t));
  }
  rep.pass = true;
  for (std::size_t i = 0; i < rep.t.size(); ++i)
    if (rep.lhs[i] > rep.rhs[i] * (1 + rep.slack) + 1e-10 * scale)
      rep.pass = false;
  return rep;
}

LREnvelope commutator_growth(const std::vector<LRProbe>& probes,
                             const EigenDecomposition& eig,
                             const std::vector<double>& t_grid) {
  if (!eig.full) throw ConfigError("commutator growth needs full spectrum");
  LREnvelope env;
  for (const auto& probe : probes) {
    double sat = 2 * operator_norm(probe.a) * operator_norm(probe.b);
    Eigen::MatrixXcd a_eig =
        eig.eigenvectors.adjoint() * probe.a.mat * eig.eigenvectors;
    Eigen::MatrixXcd b_eig =
        eig.eigenvectors.adjoint() * probe.b.mat * eig.eigenvectors;
    for (double t : t_grid) {
      Eigen::MatrixXcd at =
          heisenberg_eigenbasis(a_eig, eig.eigenvalues, cplx(t, 0));
      double norm = operator_norm(Eigen::MatrixXcd(at * b_eig - b_eig * at));
      env.samples.push_back({probe.distance, t, norm, sat});
    }
  }
  // Fit log(norm) = log C + log(e^{vt} - 1) - mu*d on the pre-saturation
  // window; v scanned over a log-spaced grid, (log C, mu) by least squares.
  std::vector<const LRSample*> usable;
  for (const auto& s : env.samples)
    if (s.t > 0 && s.norm > 1e-12 && s.norm < 0.45 * s.saturation)
      usable.push_back(&s);
  if (usable.size() < 3)
    throw ConfigError("fewer than 3 usable commutator samples for the fit");
  double best_err = -1;
  for (int iv = 0; iv < 80; ++iv) {
    double v = 0.05 * std::pow(8.0 / 0.05, iv / 79.0);
    // design: y = c0 - mu*d with y = log(norm) - log(e^{vt}-1)
    double sw = 0, sd = 0, sdd = 0, sy = 0, sdy = 0;
    for (const auto* s : usable) {
      double y = std::log(s->norm) - std::log(std::expm1(v * s->t));
      sw += 1;
      sd += s->distance;
      sdd += s->distance * s->distance;
      sy += y;
      sdy += s->distance * y;
    }
    double det = sw * sdd - sd * sd;
    double c0, slope;
    if (std::abs(det) < 1e-12) {  // single distance: mu pinned at 0
      c0 = sy / sw;
      slope = 0;
    } else {
      c0 = (sdd * sy - sd * sdy) / det;
      slope = (sw * sdy - sd * sy) / det;  // = -mu
    }
    double err = 0;
    for (const auto* s : usable) {
      double y = std::log(s->norm) - std::log(std::expm1(v * s->t));
      double r = y - (c0 + slope * s->distance);
      err += r * r;
    }
    if (best_err < 0 || err < best_err) {
      best_err = err;
      env.C = std::exp(c0);
      env.mu = -slope;
      env.v = v;
    }
  }
  double mean = 0;
  for (const auto* s : usable) mean += std::log(s->norm);
  mean /= static_cast<double>(usable.size());
  double ss_tot = 0;
  for (const auto* s : usable) {
    double d = std::log(s->norm) - mean;
    ss_tot += d * d;
  }
  // residuals of the final model in log space
  double ss_res = 0;
  for (const auto* s : usable) {
    double pred = std::log(env.C) + std::log(std::expm1(env.v * s->t)) -
                  env.mu * s->distance;
    double d = std::log(s->norm) - pred;
    ss_res += d * d;
  }
  env.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return env;
}

}  // namespace halled
