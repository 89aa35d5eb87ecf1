#include "halled/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace halled {

namespace {
int pmod(int a, int m) {
  int r = a % m;
  return r < 0 ? r + m : r;
}
}  // namespace

void LatticeSpec::validate() const {
  if (L1 < 2 || L2 < 2)
    throw ConfigError("lattice sides must be at least 2, got " +
                      std::to_string(L1) + "x" + std::to_string(L2));
  // Direction 1 carries the flux cuts of every preset; it must be even.
  if (L1 % 2 != 0)
    throw ConfigError("L1 must be even (torus halves must balance), got " +
                      std::to_string(L1));
}

Site LatticeSpec::wrap(Site x) const {
  return {pmod(x.x1, L1), pmod(x.x2, L2)};
}

int LatticeSpec::index(Site x) const {
  Site w = wrap(x);
  return w.x2 * L1 + w.x1;
}

Site LatticeSpec::site(int idx) const {
  return {idx % L1, idx / L1};
}

int LatticeSpec::coord(int dir, int idx) const {
  return dir == 1 ? idx % L1 : idx / L1;
}

int LatticeSpec::periodic_distance(Site a, Site b) const {
  Site wa = wrap(a), wb = wrap(b);
  int d1 = std::abs(wa.x1 - wb.x1);
  int d2 = std::abs(wa.x2 - wb.x2);
  return std::min(d1, L1 - d1) + std::min(d2, L2 - d2);
}

CutFunction CutFunction::step(int dir, int k) {
  if (dir != 1 && dir != 2) throw ConfigError("cut direction must be 1 or 2");
  CutFunction c;
  c.dir = dir;
  c.k = k;
  return c;
}

CutFunction CutFunction::deformed(int dir, int k, Site anchor, int R0,
                                  std::unordered_map<int, double> values,
                                  const LatticeSpec& lat) {
  CutFunction c = step(dir, k);
  c.anchor = lat.wrap(anchor);
  c.R0 = R0;
  for (const auto& [idx, v] : values) {
    if (lat.periodic_distance(lat.site(idx), *c.anchor) >= R0)
      throw ConfigError("deformed cut value at site " + std::to_string(idx) +
                        " lies at distance >= R0 from the anchor");
    (void)v;
  }
  c.values = std::move(values);
  return c;
}

double CutFunction::step_eval(const LatticeSpec& lat, Site x) const {
  Site w = lat.wrap(x);
  int L = lat.length(dir);
  int c = dir == 1 ? w.x1 : w.x2;
  return (2 * pmod(c - k, L) < L) ? 1.0 : 0.0;
}

double CutFunction::eval(const LatticeSpec& lat, Site x) const {
  Site w = lat.wrap(x);
  if (anchor) {
    auto it = values.find(lat.index(w));
    if (it != values.end()) return it->second;
  }
  return step_eval(lat, w);
}

double CutFunction::delta(const LatticeSpec& lat, int site_index) const {
  if (!anchor) return 0.0;
  Site x = lat.site(site_index);
  return eval(lat, x) - step_eval(lat, x);
}

int cut_crossing(const LatticeSpec& lat, int dir, int k, int a, int b) {
  int L = lat.length(dir);
  int ca = lat.coord(dir, a);
  int cb = lat.coord(dir, b);
  int d = pmod(cb - ca, L);
  if (d == 0) return 0;
  if (2 * d < L)  // forward move by d
    return (pmod(k - ca, L) >= 1 && pmod(k - ca, L) <= d) ? 1 : 0;
  if (2 * d > L) {  // backward move by L-d
    int dn = L - d;
    return (pmod(k - cb, L) >= 1 && pmod(k - cb, L) <= dn) ? -1 : 0;
  }
  // Displacement exactly L/2: traverse upward from the smaller coordinate.
  if (ca < cb)
    return (pmod(k - ca, L) >= 1 && pmod(k - ca, L) <= d) ? 1 : 0;
  return -cut_crossing(lat, dir, k, b, a);
}

void Region::validate(const LatticeSpec& lat) const {
  if (M < 0) throw ConfigError("region half-width must be nonnegative");
  if (2 * M + 1 > std::min(lat.L1, lat.L2))
    throw ConfigError("region half-width too large for torus: 2M+1 = " +
                      std::to_string(2 * M + 1) + " exceeds min(L1,L2)");
}

std::vector<int> Region::sites(const LatticeSpec& lat) const {
  validate(lat);
  std::set<int> out;
  for (int x1 = k - M; x1 <= k + M; ++x1)
    for (int x2 = l; x2 <= l + 2 * M; ++x2) out.insert(lat.index({x1, x2}));
  return {out.begin(), out.end()};
}

}  // namespace halled
