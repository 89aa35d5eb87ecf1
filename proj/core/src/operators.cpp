#include "halled/operators.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "halled/errors.hpp"

namespace halled {

SparseOperator SparseOperator::from_triplets(int dim,
                                             std::vector<Triplet>& trips,
                                             bool hermitian,
                                             double prune_tol) {
  SparseOperator out;
  out.mat.resize(dim, dim);
  out.mat.setFromTriplets(trips.begin(), trips.end());
  out.mat.prune([prune_tol](int, int, const cplx& v) {
    return std::abs(v) > prune_tol;
  });
  out.mat.makeCompressed();
  out.hermitian = hermitian;
  if (hermitian) out.validate_hermitian();
  return out;
}

SparseOperator SparseOperator::from_dense(const Eigen::MatrixXcd& dense,
                                          bool hermitian, double prune_tol) {
  std::vector<Triplet> trips;
  for (int c = 0; c < dense.cols(); ++c)
    for (int r = 0; r < dense.rows(); ++r)
      if (std::abs(dense(r, c)) > prune_tol)
        trips.emplace_back(r, c, dense(r, c));
  return from_triplets(static_cast<int>(dense.rows()), trips, hermitian,
                       prune_tol);
}

SparseOperator SparseOperator::diagonal(const std::vector<double>& entries) {
  std::vector<Triplet> trips;
  for (int i = 0; i < static_cast<int>(entries.size()); ++i)
    if (entries[i] != 0.0) trips.emplace_back(i, i, cplx(entries[i], 0));
  return from_triplets(static_cast<int>(entries.size()), trips, true);
}

SparseOperator SparseOperator::zero(int dim) {
  SparseOperator out;
  out.mat.resize(dim, dim);
  out.hermitian = true;
  return out;
}

SparseOperator SparseOperator::identity(int dim) {
  std::vector<Triplet> trips;
  trips.reserve(dim);
  for (int i = 0; i < dim; ++i) trips.emplace_back(i, i, cplx(1, 0));
  return from_triplets(dim, trips, true);
}

double SparseOperator::hermiticity_defect() const {
  SpMat d = SpMat(mat.adjoint()) - mat;
  double mx = 0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (SpMat::InnerIterator it(d, k); it; ++it)
      mx = std::max(mx, std::abs(it.value()));
  return mx;
}

void SparseOperator::validate_hermitian(double tol) const {
  double defect = hermiticity_defect();
  double scale = std::max(1.0, max_abs());
  if (defect > tol * scale)
    throw ConfigError("operator fails Hermiticity check: defect " +
                      std::to_string(defect));
}

double SparseOperator::max_abs() const {
  double mx = 0;
  for (int k = 0; k < mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(mat, k); it; ++it)
      mx = std::max(mx, std::abs(it.value()));
  return mx;
}

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
  SparseOperator out;
  out.mat = a.mat + b.mat;
  out.hermitian = a.hermitian && b.hermitian;
  return out;
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
  SparseOperator out;
  out.mat = a.mat - b.mat;
  out.hermitian = a.hermitian && b.hermitian;
  return out;
}

SparseOperator operator*(cplx s, const SparseOperator& a) {
  SparseOperator out;
  out.mat = s * a.mat;
  out.hermitian = a.hermitian && std::imag(s) == 0.0;
  return out;
}

namespace {

// Power iteration for ||A||_2 via v <- A^dag A v. The start vector is a fixed
// smooth profile so results are reproducible.
template <class Matvec>
double power_norm(int dim, Matvec&& apply_ata, double tol, int max_iter) {
  if (dim == 0) return 0.0;
  Eigen::VectorXcd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = cplx(std::cos(0.7 * i) + 0.1, 0);
  v.normalize();
  double est = 0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXcd w = apply_ata(v);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    double next = std::sqrt(nw);  // ||A v|| ~ sqrt(v^dag A^dag A v) growth
    w /= nw;
    double delta = std::abs(next - est);
    v = w;
    est = next;
    if (it > 2 && delta <= tol * std::max(est, 1e-300)) break;
  }
  return est;
}

}  // namespace

double operator_norm(const SpMat& a, double tol, int max_iter) {
  SpMat adj = a.adjoint();
  return power_norm(
      static_cast<int>(a.rows()),
      [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        return adj * (a * v);
      },
      tol, max_iter);
}

double operator_norm(const Eigen::MatrixXcd& a, double tol, int max_iter) {
  Eigen::MatrixXcd adj = a.adjoint();
  return power_norm(
      static_cast<int>(a.rows()),
      [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        return adj * (a * v);
      },
      tol, max_iter);
}

void HoppingSet::add(int x, int y, cplx t) {
  if (x == y) {
    entries[{x, x}] += t;
    return;
  }
  entries[{x, y}] += t;
  entries[{y, x}] += std::conj(t);
}

cplx HoppingSet::at(int x, int y) const {
  auto it = entries.find({x, y});
  return it == entries.end() ? cplx(0, 0) : it->second;
}

void HoppingSet::validate(const LatticeSpec& lat) const {
  int n = lat.n_sites();
  for (const auto& [key, t] : entries) {
    auto [x, y] = key;
    if (x < 0 || x >= n || y < 0 || y >= n)
      throw ConfigError("hopping site index out of range");
    cplx rev = at(y, x);
    if (std::abs(rev - std::conj(t)) >
        1e-12 * std::max(1.0, std::abs(t)))
      throw ConfigError("hopping set breaks Hermiticity at bond (" +
                        std::to_string(x) + "," + std::to_string(y) + ")");
    if (x != y &&
        lat.periodic_distance(lat.site(x), lat.site(y)) > range)
      throw ConfigError("hopping bond exceeds declared range");
  }
}

void InteractionSet::add(std::vector<int> sites, double u) {
  terms.push_back({std::move(sites), u});
}

void InteractionSet::validate(const LatticeSpec& lat) const {
  int n = lat.n_sites();
  for (const auto& term : terms) {
    if (term.sites.empty())
      throw ConfigError("interaction term with no sites");
    std::set<int> uniq(term.sites.begin(), term.sites.end());
    if (uniq.size() != term.sites.size())
      throw ConfigError("interaction term repeats a site");
    for (int s : term.sites)
      if (s < 0 || s >= n)
        throw ConfigError("interaction site index out of range");
    for (int a : term.sites)
      for (int b : term.sites)
        if (lat.periodic_distance(lat.site(a), lat.site(b)) > range)
          throw ConfigError("interaction term exceeds declared range");
  }
}

TwistConfig TwistConfig::plain(int k1, double phi1, int k2, double phi2) {
  TwistConfig tc;
  tc.twists.push_back({1, phi1, CutFunction::step(1, k1)});
  tc.twists.push_back({2, phi2, CutFunction::step(2, k2)});
  return tc;
}

void TwistConfig::validate() const {
  bool seen[3] = {false, false, false};
  for (const auto& tw : twists) {
    if (tw.dir != 1 && tw.dir != 2)
      throw ConfigError("twist direction must be 1 or 2");
    if (tw.cut.dir != tw.dir)
      throw ConfigError("twist cut direction disagrees with twist direction");
    if (seen[tw.dir]) throw ConfigError("duplicate twist direction");
    seen[tw.dir] = true;
  }
}

HoppingSet apply_twist(const LatticeSpec& lat, const HoppingSet& hops,
                       const TwistConfig& tc) {
  tc.validate();
  HoppingSet out;
  out.range = hops.range;
  for (const auto& [key, t] : hops.entries) {
    auto [x, y] = key;
    cplx f(1, 0);
    for (const auto& tw : tc.twists) {
      double w = cut_crossing(lat, tw.dir, tw.cut.k, x, y);
      if (tw.cut.anchor)
        w += tw.cut.delta(lat, y) - tw.cut.delta(lat, x);
      if (w != 0.0) f *= std::exp(cplx(0, tw.phi * w));
    }
    out.entries[{x, y}] = t * f;
  }
  return out;
}

SparseOperator build_hamiltonian(const LatticeSpec& lat,
                                 const HoppingSet& hops,
                                 const InteractionSet& ints,
                                 const FockBasis& basis) {
  hops.validate(lat);
  ints.validate(lat);
  if (basis.n_sites != lat.n_sites())
    throw ConfigError("basis does not match lattice size");
  int dim = basis.dim();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(dim) *
                (hops.entries.size() / 2 + 2));
  for (int r = 0; r < dim; ++r) {
    std::uint64_t mask = basis.masks[static_cast<std::size_t>(r)];
    double diag = 0;
    for (const auto& term : ints.terms) {
      bool all = true;
      for (int s : term.sites)
        if (!((mask >> s) & 1ull)) {
          all = false;
          break;
        }
      if (all) diag += term.u;
    }
    for (const auto& [key, t] : hops.entries) {
      auto [x, y] = key;
      if (x == y) {
        if ((mask >> x) & 1ull) diag += std::real(t);
        continue;
      }
      auto he = matrix_element_hop(mask, x, y);
      if (!he) continue;
      int rr = basis.index_of(he->mask);
      trips.emplace_back(rr, r, t * static_cast<double>(he->sign));
    }
    if (diag != 0.0) trips.emplace_back(r, r, cplx(diag, 0));
  }
  return SparseOperator::from_triplets(dim, trips, true);
}

SparseOperator diagonal_from_cut(const CutFunction& f, const LatticeSpec& lat,
                                 const FockBasis& basis) {
  std::vector<double> w(static_cast<std::size_t>(lat.n_sites()));
  for (int s = 0; s < lat.n_sites(); ++s) w[s] = f.eval(lat, lat.site(s));
  return diagonal_from_weights(w, basis);
}

SparseOperator diagonal_from_weights(const std::vector<double>& w,
                                     const FockBasis& basis) {
  std::vector<double> d(static_cast<std::size_t>(basis.dim()));
  for (int r = 0; r < basis.dim(); ++r) {
    std::uint64_t mask = basis.masks[static_cast<std::size_t>(r)];
    double v = 0;
    for (int s = 0; s < basis.n_sites; ++s)
      if ((mask >> s) & 1ull) v += w[static_cast<std::size_t>(s)];
    d[static_cast<std::size_t>(r)] = v;
  }
  return SparseOperator::diagonal(d);
}

Eigen::VectorXd occupation_vector(const FockBasis& basis, int site) {
  Eigen::VectorXd v(basis.dim());
  for (int r = 0; r < basis.dim(); ++r)
    v[r] = static_cast<double>(
        (basis.masks[static_cast<std::size_t>(r)] >> site) & 1ull);
  return v;
}

Eigen::VectorXcd gauge_phases(const LatticeSpec& lat, const FockBasis& basis,
                              int dir, int k, double phi) {
  int km1 = dir == 1 ? ((k - 1) % lat.L1 + lat.L1) % lat.L1
                     : ((k - 1) % lat.L2 + lat.L2) % lat.L2;
  Eigen::VectorXcd g(basis.dim());
  for (int r = 0; r < basis.dim(); ++r) {
    std::uint64_t mask = basis.masks[static_cast<std::size_t>(r)];
    int count = 0;
    for (int s = 0; s < basis.n_sites; ++s)
      if (((mask >> s) & 1ull) && lat.coord(dir, s) == km1) ++count;
    g[r] = std::exp(cplx(0, phi * count));
  }
  return g;
}

SparseOperator gauge_move(const SparseOperator& a, const LatticeSpec& lat,
                          const FockBasis& basis, int dir, int k, double phi) {
  Eigen::VectorXcd g = gauge_phases(lat, basis, dir, k, phi);
  SparseOperator out = a;
  for (int col = 0; col < out.mat.outerSize(); ++col)
    for (SpMat::InnerIterator it(out.mat, col); it; ++it)
      it.valueRef() *= g[it.row()] * std::conj(g[col]);
  return out;
}

Eigen::VectorXcd gauge_move(const Eigen::VectorXcd& v, const LatticeSpec& lat,
                            const FockBasis& basis, int dir, int k,
                            double phi) {
  return gauge_phases(lat, basis, dir, k, phi).cwiseProduct(v);
}

HoppingSet restrict_hops(const HoppingSet& hops,
                         const std::vector<int>& sites) {
  std::unordered_set<int> keep(sites.begin(), sites.end());
  HoppingSet out;
  out.range = hops.range;
  for (const auto& [key, t] : hops.entries)
    if (keep.count(key.first) && keep.count(key.second))
      out.entries[key] = t;
  return out;
}

InteractionSet restrict_ints(const InteractionSet& ints,
                             const std::vector<int>& sites) {
  std::unordered_set<int> keep(sites.begin(), sites.end());
  InteractionSet out;
  out.range = ints.range;
  for (const auto& term : ints.terms) {
    bool all = true;
    for (int s : term.sites)
      if (!keep.count(s)) {
        all = false;
        break;
      }
    if (all) out.terms.push_back(term);
  }
  return out;
}

}  // namespace halled
