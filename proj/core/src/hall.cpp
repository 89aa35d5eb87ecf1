#include "halled/hall.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "halled/cache.hpp"
#include "halled/errors.hpp"
#include "halled/parallel.hpp"

namespace halled {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

double kubo_sum(const SparseOperator& j1, const SparseOperator& j2,
                const GroundMultiplet& m, const EigenDecomposition& eig,
                double gap_floor, double imag_tol) {
  if (!eig.full) throw ConfigError("kubo_sum needs the full spectrum");
  if (!(m.gap > gap_floor))
    throw MultipletError("kubo_sum: gap " + fmt_g(m.gap) +
                         " at or below floor " + fmt_g(gap_floor));
  const int q = m.q;
  const int dim = eig.count();
  if (q < 1 || q >= dim) throw ConfigError("multiplet size out of range");
  Eigen::MatrixXcd A =
      eig.eigenvectors.leftCols(q).adjoint() *
      (j1.mat * eig.eigenvectors.rightCols(dim - q));
  Eigen::MatrixXcd B =
      eig.eigenvectors.leftCols(q).adjoint() *
      (j2.mat * eig.eigenvectors.rightCols(dim - q));
  cplx s = 0;
  for (int mi = 0; mi < q; ++mi)
    for (int n = 0; n < dim - q; ++n) {
      double den = eig.eigenvalues[mi] - eig.eigenvalues[q + n];
      cplx z = A(mi, n) * std::conj(B(mi, n));
      s += (z - std::conj(z)) / (den * den);  // exactly 2i Im(z) / den^2
    }
  cplx val = cplx(0, 1.0 / q) * s;
  if (std::abs(val.imag()) > imag_tol)
    throw ToleranceError("kubo_sum imaginary residue " + fmt_g(val.imag()) +
                         " above " + fmt_g(imag_tol));
  return val.real();
}

double kubo_average(const HamiltonianSpec& spec, const FockBasis& basis,
                    int k1, int k2, int n_phi, int q,
                    const EigensolveOptions& opts) {
  if (n_phi < 1) throw ConfigError("kubo_average needs n_phi >= 1");
  double acc = 0;
  for (int i = 0; i < n_phi; ++i)
    for (int j = 0; j < n_phi; ++j) {
      TwistConfig tc = TwistConfig::plain(k1, kTwoPi * i / n_phi, k2,
                                          kTwoPi * j / n_phi);
      HoppingSet tw = apply_twist(spec.lattice, spec.hoppings, tc);
      SparseOperator h =
          build_hamiltonian(spec.lattice, tw, spec.interactions, basis);
      EigenDecomposition eig = eigensolve_full(h, opts);
      GroundMultiplet m;
      m.q = q;
      m.energies = eig.eigenvalues.head(q);
      m.frame = eig.eigenvectors.leftCols(q);
      m.spread = eig.eigenvalues[q - 1] - eig.eigenvalues[0];
      m.gap = eig.eigenvalues[q] - eig.eigenvalues[q - 1];
      CurrentSpec c1;
      c1.dir = 1;
      c1.k = k1;
      CurrentSpec c2;
      c2.dir = 2;
      c2.k = k2;
      SparseOperator jx = local_current(spec.lattice, tw, c1, basis);
      SparseOperator jy = local_current(spec.lattice, tw, c2, basis);
      acc += kubo_sum(jx, jy, m, eig);
    }
  return acc / (static_cast<double>(n_phi) * n_phi);
}

namespace {

Eigen::MatrixXcd stencil_frame(
    const std::function<SparseOperator(double, double)>& build_at, double p1,
    double p2, int q, const EigensolveOptions& opts, double gap_floor) {
  SparseOperator h = build_at(p1, p2);
  EigenDecomposition eig = eigensolve_lowest(h, q + 1, opts);
  double gap = eig.eigenvalues[q] - eig.eigenvalues[q - 1];
  if (!(gap > gap_floor))
    throw MultipletError("multiplet not separated at stencil point (" +
                         fmt_g(p1) + ", " + fmt_g(p2) + "): gap " +
                         fmt_g(gap));
  return eig.eigenvectors.leftCols(q);
}

}  // namespace

double projector_trace(
    const std::function<SparseOperator(double, double)>& build_at,
    double phi1, double phi2, int q, double h, const EigensolveOptions& opts,
    double gap_floor) {
  if (q < 1) throw ConfigError("projector_trace needs q >= 1");
  if (!(h > 0)) throw ConfigError("finite-difference step must be positive");
  Eigen::MatrixXcd v0 =
      stencil_frame(build_at, phi1, phi2, q, opts, gap_floor);
  Eigen::MatrixXcd v1[2] = {
      stencil_frame(build_at, phi1 + h, phi2, q, opts, gap_floor),
      stencil_frame(build_at, phi1 - h, phi2, q, opts, gap_floor)};
  Eigen::MatrixXcd v2[2] = {
      stencil_frame(build_at, phi1, phi2 + h, q, opts, gap_floor),
      stencil_frame(build_at, phi1, phi2 - h, q, opts, gap_floor)};
  // Tr P0 [P1, P2] with Pj the central projector difference. Expanding in
  // q x q overlap blocks, the reversed product is the exact conjugate of the
  // forward one, so each stencil pair contributes 2i Im tr(forward).
  cplx acc = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double sgn = (a == 0 ? 1.0 : -1.0) * (b == 0 ? 1.0 : -1.0);
      cplx fwd = ((v0.adjoint() * v1[a]) * (v1[a].adjoint() * v2[b]) *
                  (v2[b].adjoint() * v0))
                     .trace();
      acc += sgn * (fwd - std::conj(fwd));
    }
  acc /= 4.0 * h * h;
  return (cplx(0, 1.0 / q) * acc).real();
}

cplx switch_on_integral(double delta, double eta, std::optional<double> T) {
  if (eta < 0) throw ConfigError("eta must be nonnegative");
  cplx w(delta, eta);
  if (std::abs(w) == 0)
    throw ConfigError("switch-on integral undefined at delta = eta = 0");
  cplx w2 = w * w;
  if (!T) return 1.0 / w2;
  if (!(*T > 0)) throw ConfigError("T must be positive");
  cplx ph = std::exp(cplx(-eta * *T, delta * *T));
  return cplx(0, *T) / w * ph + 1.0 / w2 - ph / w2;
}

TimeDomainReport time_domain(const SparseOperator& j_window,
                             const SparseOperator& chi,
                             const SparseOperator& h,
                             const TimeDomainParams& params,
                             const GroundMultiplet& m,
                             const EigenDecomposition& eig) {
  if (!eig.full) throw ConfigError("time_domain needs the full spectrum");
  if (!(m.gap > 0)) throw MultipletError("time_domain needs a positive gap");
  if (params.eta < 0) throw ConfigError("eta must be nonnegative");
  const int q = m.q;
  const int dim = eig.count();
  const Eigen::VectorXd& E = eig.eigenvalues;
  Eigen::MatrixXcd A =
      eig.eigenvectors.leftCols(q).adjoint() *
      (j_window.mat * eig.eigenvectors.rightCols(dim - q));
  Eigen::MatrixXcd Xc =
      eig.eigenvectors.leftCols(q).adjoint() *
      (chi.mat * eig.eigenvectors.rightCols(dim - q));

  // <n|i[H,chi]|0m> = i (E_n - E_{0m}) <n|chi|0m>; the s-integral against
  // s e^{eta s} e^{-i D s} has an exact antiderivative.
  auto sigma_at = [&](double eta, std::optional<double> T) {
    cplx s = 0;
    for (int mi = 0; mi < q; ++mi)
      for (int n = 0; n < dim - q; ++n) {
        double D = E[q + n] - E[mi];
        cplx bnm = cplx(0, D) * std::conj(Xc(mi, n));
        cplx I = switch_on_integral(D, eta, T);
        cplx z = A(mi, n) * bnm * std::conj(I);
        s += z - std::conj(z);
      }
    return (cplx(0, 1.0 / q) * s).real();
  };

  TimeDomainReport rep;
  rep.sigma = sigma_at(params.eta, params.T);
  rep.sigma_limit = sigma_at(0.0, std::nullopt);
  rep.persistent_current = multiplet_expectation(j_window, m).real();

  const double eta = params.eta;
  const double gap = m.gap;
  cplx ic = 0;
  if (eta > 0) {
    for (int mi = 0; mi < q; ++mi)
      for (int n = 0; n < dim - q; ++n) {
        double D = E[q + n] - E[mi];
        cplx w(D, eta);
        cplx iw2 = 1.0 / (w * w);
        cplx z = Xc(mi, n) * std::conj(A(mi, n)) * iw2;
        ic += eta * (z - std::conj(z));
      }
    ic /= static_cast<double>(q);
  }
  rep.correction = std::abs(ic);

  const double njw = operator_norm(j_window);
  const double nchi = operator_norm(chi);
  SpMat jg_mat = h.mat * chi.mat - chi.mat * h.mat;
  jg_mat = cplx(0, 1) * jg_mat;
  const double njg = operator_norm(jg_mat);

  const double cor_bound = 2.0 * eta / (gap * gap) * nchi * njw;
  rep.checks.push_back({"eta_correction", rep.correction, cor_bound,
                        rep.correction <= cor_bound});

  const double lhs = std::abs(rep.sigma - rep.sigma_limit);
  const double tail =
      params.T ? (1.0 + *params.T * gap) * std::exp(-eta * *params.T) : 0.0;
  const double rhs =
      2.0 *
      ((2.0 * gap + eta) / std::pow(gap, 4) * eta + tail / (gap * gap)) *
      njw * njg;
  rep.checks.push_back({"adiabatic_deviation", lhs, rhs, lhs <= rhs});

  if (params.T && eta * *params.T < 3.0)
    rep.warnings.push_back(
        "eta * T = " + fmt_g(eta * *params.T) +
        " is below 3: the slow-switching limit is poorly resolved");
  return rep;
}

TimeDomainReport time_domain_conductance(const HamiltonianSpec& spec,
                                         const FockBasis& basis,
                                         const TwistConfig& tc,
                                         const TimeDomainParams& params,
                                         const GroundMultiplet& m,
                                         const EigenDecomposition& eig) {
  HoppingSet tw = apply_twist(spec.lattice, spec.hoppings, tc);
  CurrentSpec cs;
  cs.dir = 1;
  cs.k = params.k;
  SparseOperator jw;
  if (params.window_halfwidth >= 0) {
    cs.window = std::make_pair(params.l, params.window_halfwidth);
    jw = windowed_current(spec.lattice, tw, cs, basis);
  } else {
    jw = local_current(spec.lattice, tw, cs, basis);
  }
  Region region{params.k, params.l, params.region_halfwidth};
  region.validate(spec.lattice);
  SparseOperator chi = region_charge(region, spec.lattice, basis);
  SparseOperator h =
      build_hamiltonian(spec.lattice, tw, spec.interactions, basis);
  return time_domain(jw, chi, h, params, m, eig);
}

ReductionResult reduce_frames(const std::vector<Eigen::MatrixXcd>& frames,
                              int n_phi, int q,
                              const std::optional<Eigen::VectorXcd>& seam1,
                              const std::optional<Eigen::VectorXcd>& seam2,
                              double link_floor) {
  if (n_phi < 2) throw ConfigError("flux grid needs n_phi >= 2");
  if (static_cast<int>(frames.size()) != n_phi * n_phi)
    throw ConfigError("frame count does not match the grid size");
  for (const Eigen::MatrixXcd& f : frames)
    if (f.cols() != q)
      throw ConfigError("frame has " + std::to_string(f.cols()) +
                        " columns, expected the multiplet size " +
                        std::to_string(q));
  ReductionResult out;
  auto frame = [&](int i, int j) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd f =
        frames[static_cast<std::size_t>((i % n_phi) * n_phi + (j % n_phi))];
    if (i == n_phi && seam1) f = seam1->asDiagonal() * f;
    if (j == n_phi && seam2) f = seam2->asDiagonal() * f;
    return f;
  };
  auto link = [&](int ai, int aj, int bi, int bj) -> cplx {
    cplx d = (frame(ai, aj).adjoint() * frame(bi, bj)).determinant();
    double mag = std::abs(d);
    out.min_link = std::min(out.min_link, mag);
    if (mag <= link_floor) {
      out.singular = true;
      if (out.message.empty())
        out.message = "singular link (" + std::to_string(ai) + "," +
                      std::to_string(aj) + ")->(" + std::to_string(bi) + "," +
                      std::to_string(bj) + "): |det| = " + fmt_g(mag);
      return cplx(1, 0);
    }
    return d / mag;
  };
  double tot = 0;
  out.curvature.reserve(static_cast<std::size_t>(n_phi) * n_phi);
  for (int i = 0; i < n_phi; ++i)
    for (int j = 0; j < n_phi; ++j) {
      cplx u = link(i, j, i, j + 1) * link(i, j + 1, i + 1, j + 1) *
               link(i + 1, j + 1, i + 1, j) * link(i + 1, j, i, j);
      double f = std::arg(u);
      tot += f;
      out.curvature.push_back(
          {i, j, kTwoPi * i / n_phi, kTwoPi * j / n_phi, f});
    }
  double p_real = tot / kTwoPi;
  out.p = static_cast<int>(std::llround(p_real));
  out.residual = std::abs(p_real - out.p);
  return out;
}

FluxAverage average_over_flux(const FrameProvider& provider,
                              const FluxGridOptions& opts) {
  if (provider.q < 1) throw ConfigError("provider multiplet size must be >= 1");
  if (opts.n_phi < 2) throw ConfigError("flux grid needs n_phi >= 2");
  int n = opts.n_phi;
  bool refined = false;
  for (;;) {
    const int total = n * n;
    std::vector<NodeData> nodes(static_cast<std::size_t>(total));
    parallel_for(total, opts.workers, [&](int idx) {
      int i = idx / n, j = idx % n;
      nodes[static_cast<std::size_t>(idx)] =
          provider.node(i, j, kTwoPi * i / n, kTwoPi * j / n);
    });
    FluxAverage out;
    out.q = provider.q;
    out.n_phi = n;
    out.refined = refined;
    out.min_gap = std::numeric_limits<double>::infinity();
    out.node_gaps.resize(static_cast<std::size_t>(total));
    out.node_spreads.resize(static_cast<std::size_t>(total));
    std::vector<Eigen::MatrixXcd> frames(static_cast<std::size_t>(total));
    for (int idx = 0; idx < total; ++idx) {
      NodeData& nd = nodes[static_cast<std::size_t>(idx)];
      frames[static_cast<std::size_t>(idx)] = std::move(nd.frame);
      out.node_gaps[static_cast<std::size_t>(idx)] = nd.gap;
      out.node_spreads[static_cast<std::size_t>(idx)] = nd.spread;
      out.min_gap = std::min(out.min_gap, nd.gap);
      out.max_spread = std::max(out.max_spread, nd.spread);
      out.q_constant = out.q_constant && nd.persists;
      out.cache_hits += nd.from_cache ? 1 : 0;
      out.cache_misses += nd.from_cache ? 0 : 1;
      out.cache_verified += nd.verified ? 1 : 0;
    }
    ReductionResult red = reduce_frames(frames, n, provider.q,
                                        provider.seam1, provider.seam2,
                                        opts.link_floor);
    bool bad = red.singular || red.residual > opts.integrality_tol;
    if (bad && opts.allow_refine && !refined) {
      refined = true;
      n *= 2;
      continue;
    }
    if (red.singular) throw ToleranceError(red.message);
    if (red.residual > opts.integrality_tol)
      throw ToleranceError("integrality residual " + fmt_g(red.residual) +
                           " above " + fmt_g(opts.integrality_tol) +
                           " on the " + std::to_string(n) + "x" +
                           std::to_string(n) + " flux grid");
    out.p = red.p;
    out.residual = red.residual;
    out.min_link = red.min_link;
    out.sigma_averaged = red.p / (kTwoPi * provider.q);
    out.curvature = std::move(red.curvature);
    out.seam1 = provider.seam1;
    out.seam2 = provider.seam2;
    if (opts.keep_frames) out.frames = std::move(frames);
    return out;
  }
}

FrameProvider make_flux_provider(const HamiltonianSpec& spec,
                                 const FockBasis& basis,
                                 const ProviderOptions& po) {
  if (po.q < 1) throw ConfigError("multiplet size must be >= 1");
  if (po.n_extra < 1)
    throw ConfigError("need at least one level above the multiplet");
  if (po.q + po.n_extra > basis.dim())
    throw ConfigError("multiplet plus margin exceeds the sector dimension");
  if (po.cut1 && po.cut1->dir != 1)
    throw ConfigError("cut1 override must be a direction-1 cut");
  if (po.cut2 && po.cut2->dir != 2)
    throw ConfigError("cut2 override must be a direction-2 cut");
  const HamiltonianSpec* spec_p = &spec;
  const FockBasis* basis_p = &basis;
  FrameProvider fp;
  fp.q = po.q;
  if (po.cut1 && !po.cut1->is_step())
    fp.seam1 = deformed_cut_seam(*po.cut1, spec.lattice, basis, -1);
  if (po.cut2 && !po.cut2->is_step())
    fp.seam2 = deformed_cut_seam(*po.cut2, spec.lattice, basis, -1);
  ProviderOptions opt = po;
  fp.node = [spec_p, basis_p, opt](int i, int j, double phi1,
                                   double phi2) -> NodeData {
    TwistConfig tc;
    Twist t1;
    t1.dir = 1;
    t1.phi = phi1;
    t1.cut = opt.cut1 ? *opt.cut1 : CutFunction::step(1, opt.k1);
    Twist t2;
    t2.dir = 2;
    t2.phi = phi2;
    t2.cut = opt.cut2 ? *opt.cut2 : CutFunction::step(2, opt.k2);
    tc.twists = {t1, t2};
    const int count = opt.q + opt.n_extra;
    NodeData nd;
    EigenDecomposition eig;
    bool solved = false;
    std::uint64_t key = 0;
    const bool caching = opt.cache && opt.cache->enabled();
    if (caching) {
      key = problem_key(*spec_p, tc, count, false, opt.eig);
      if (auto hit = opt.cache->load(key)) {
        if (hit->count() == count && hit->dim() == basis_p->dim()) {
          if (i % 4 == 0 && j % 4 == 0) {
            // 1-in-16 warm-node spot check against a fresh solve.
            SparseOperator h = spec_p->build(*basis_p, tc);
            EigenDecomposition fresh = eigensolve_lowest(h, count, opt.eig);
            double scale =
                std::max(1.0, fresh.eigenvalues.cwiseAbs().maxCoeff());
            double dev =
                (fresh.eigenvalues - hit->eigenvalues).cwiseAbs().maxCoeff();
            if (dev > 1e-12 * scale)
              throw ToleranceError(
                  "cached eigenvalues at flux node (" + fmt_g(phi1) + ", " +
                  fmt_g(phi2) + ") deviate by " + fmt_g(dev) +
                  " from a fresh solve");
            eig = std::move(fresh);
            nd.verified = true;
          } else {
            eig = std::move(*hit);
          }
          nd.from_cache = true;
          solved = true;
        }
      }
    }
    if (!solved) {
      SparseOperator h = spec_p->build(*basis_p, tc);
      eig = eigensolve_lowest(h, count, opt.eig);
      if (caching) opt.cache->store(key, eig);
    }
    nd.energies = eig.eigenvalues.head(count);
    nd.frame = eig.eigenvectors.leftCols(opt.q);
    nd.gap = eig.eigenvalues[opt.q] - eig.eigenvalues[opt.q - 1];
    nd.spread = eig.eigenvalues[opt.q - 1] - eig.eigenvalues[0];
    if (!(nd.gap > opt.gap_floor))
      throw MultipletError("gap closed at flux node (" + fmt_g(phi1) + ", " +
                           fmt_g(phi2) + "): gap " + fmt_g(nd.gap));
    nd.persists = opt.q == 1 || nd.spread < nd.gap;
    return nd;
  };
  return fp;
}

GroundMultiplet detect_at(const HamiltonianSpec& spec, const FockBasis& basis,
                          const TwistConfig& tc, std::optional<int> q_hint,
                          const EigensolveOptions& opts, int solve_count) {
  SparseOperator h = spec.build(basis, tc);
  EigenDecomposition eig;
  if (basis.dim() <= opts.dense_threshold)
    eig = eigensolve_full(h, opts);
  else
    eig = eigensolve_lowest(h, std::min(solve_count, basis.dim()), opts);
  return detect_multiplet(eig, q_hint);
}

Eigen::VectorXcd deformed_cut_seam(const CutFunction& cut,
                                   const LatticeSpec& lat,
                                   const FockBasis& basis, int sign) {
  std::vector<double> delta(static_cast<std::size_t>(lat.n_sites()), 0.0);
  for (int s = 0; s < lat.n_sites(); ++s)
    delta[static_cast<std::size_t>(s)] = cut.delta(lat, s);
  Eigen::VectorXcd out(basis.dim());
  for (int r = 0; r < basis.dim(); ++r) {
    double acc = 0;
    for (int s = 0; s < lat.n_sites(); ++s)
      if (basis.occupied(r, s)) acc += delta[static_cast<std::size_t>(s)];
    out[r] = std::exp(cplx(0, sign * kTwoPi * acc));
  }
  return out;
}

std::vector<DeformationCheck> deformation_invariance(
    const FluxAverage& base, const FockBasis& basis, int site,
    const std::vector<double>& alphas, double link_floor) {
  if (base.frames.empty())
    throw ConfigError(
        "deformation_invariance needs stored frames (set keep_frames)");
  if (site < 0 || site >= basis.n_sites)
    throw ConfigError("deformation site out of range");
  const int n = base.n_phi;
  Eigen::VectorXd occ = occupation_vector(basis, site);
  std::vector<DeformationCheck> out;
  for (double alpha : alphas) {
    std::vector<Eigen::MatrixXcd> fr(base.frames.size());
    for (int i = 0; i < n; ++i) {
      const double phi1 = kTwoPi * i / n;
      Eigen::VectorXcd g(basis.dim());
      for (int r = 0; r < basis.dim(); ++r)
        g[r] = std::exp(cplx(0, -alpha * phi1 * occ[r]));
      for (int j = 0; j < n; ++j)
        fr[static_cast<std::size_t>(i * n + j)] =
            g.asDiagonal() * base.frames[static_cast<std::size_t>(i * n + j)];
    }
    Eigen::VectorXcd t1(basis.dim());
    for (int r = 0; r < basis.dim(); ++r)
      t1[r] = std::exp(cplx(0, -alpha * kTwoPi * occ[r]));
    if (base.seam1) t1 = t1.cwiseProduct(*base.seam1);
    ReductionResult red =
        reduce_frames(fr, n, base.q, t1, base.seam2, link_floor);
    DeformationCheck c;
    c.label = "alpha=" + fmt_g(alpha);
    c.p = red.p;
    c.residual = red.residual;
    c.pass = !red.singular && red.p == base.p && red.residual <= 1e-9;
    out.push_back(std::move(c));
  }
  return out;
}

DeformationCheck deformed_cut_invariance(const HamiltonianSpec& spec,
                                         const FockBasis& basis,
                                         const FluxAverage& base,
                                         const CutFunction& cut1,
                                         const ProviderOptions& po,
                                         const FluxGridOptions& go) {
  ProviderOptions po2 = po;
  po2.cut1 = cut1;
  po2.q = base.q;
  FrameProvider fp = make_flux_provider(spec, basis, po2);
  FluxGridOptions go2 = go;
  go2.n_phi = base.n_phi;  // same grid as the reference run
  go2.keep_frames = false;
  FluxAverage res = average_over_flux(fp, go2);
  DeformationCheck c;
  c.label = "deformed-cut";
  c.p = res.p;
  c.residual = res.residual;
  c.pass = res.p == base.p;
  return c;
}

int band_chern(int flux_num, int flux_den, int band, int mesh,
               double* residual) {
  if (flux_den <= 0) throw ConfigError("flux denominator must be positive");
  const int m = flux_den;
  if (band < 0 || band >= m) throw ConfigError("band index out of range");
  if (mesh < 2) throw ConfigError("mesh must be at least 2");
  const double t = 1.0;
  std::vector<Eigen::VectorXcd> fr(static_cast<std::size_t>(mesh) * mesh);
  for (int i = 0; i < mesh; ++i)
    for (int j = 0; j < mesh; ++j) {
      const double k1 = kTwoPi / m * i / mesh;
      const double k2 = kTwoPi * j / mesh;
      Eigen::MatrixXcd hk = Eigen::MatrixXcd::Zero(m, m);
      for (int a = 0; a < m; ++a) {
        hk(a, (a + 1) % m) += -t * std::exp(cplx(0, k1));
        hk((a + 1) % m, a) += -t * std::exp(cplx(0, -k1));
        hk(a, a) +=
            -2.0 * t * std::cos(kTwoPi * flux_num / double(m) * a + k2);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hk);
      fr[static_cast<std::size_t>(i * mesh + j)] =
          es.eigenvectors().col(band);
    }
  // Crossing the reduced-zone boundary k1 -> k1 + 2 pi / m maps eigenframes
  // by the diagonal unitary U_a = exp(2 pi i a / m); wrapped frames carry
  // U^dag so the links compare like with like.
  Eigen::VectorXcd useam(m);
  for (int a = 0; a < m; ++a)
    useam[a] = std::exp(cplx(0, -kTwoPi * a / double(m)));
  auto frame = [&](int i, int j) -> Eigen::VectorXcd {
    Eigen::VectorXcd f =
        fr[static_cast<std::size_t>((i % mesh) * mesh + (j % mesh))];
    if (i == mesh) f = useam.cwiseProduct(f);
    return f;
  };
  auto link = [&](int ai, int aj, int bi, int bj) -> cplx {
    cplx d = frame(ai, aj).dot(frame(bi, bj));
    double mag = std::abs(d);
    if (mag <= 1e-12)
      throw ToleranceError("singular Bloch link at (" + std::to_string(ai) +
                           "," + std::to_string(aj) + ")");
    return d / mag;
  };
  double tot = 0;
  for (int i = 0; i < mesh; ++i)
    for (int j = 0; j < mesh; ++j) {
      cplx u = link(i, j, i, j + 1) * link(i, j + 1, i + 1, j + 1) *
               link(i + 1, j + 1, i + 1, j) * link(i + 1, j, i, j);
      tot += std::arg(u);
    }
  const double p_real = tot / kTwoPi;
  const int p = static_cast<int>(std::llround(p_real));
  if (residual) *residual = std::abs(p_real - p);
  return p;
}

}  // namespace halled
