#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "halled/errors.hpp"

namespace halled {

// Square-torus geometry. Coordinates live in [0,L1) x [0,L2); the linear site
// index is row-major, index = x2 * L1 + x1, and every fermionic sign convention
// downstream refers to this ordering.
struct Site {
  int x1 = 0;
  int x2 = 0;
  friend bool operator==(const Site&, const Site&) = default;
};

struct LatticeSpec {
  int L1 = 0;
  int L2 = 0;

  void validate() const;
  int n_sites() const { return L1 * L2; }
  Site wrap(Site x) const;
  int index(Site x) const;
  Site site(int idx) const;
  int coord(int dir, int idx) const;  // dir in {1,2}
  int length(int dir) const { return dir == 1 ? L1 : L2; }

  // l^1 distance with wraparound in both directions.
  int periodic_distance(Site a, Site b) const;
};

// Torus step function for a cut at k in direction dir:
//   theta(x;k) = 1  iff  mod(x_dir - k, L) < L/2,
// i.e. the indicator of the half-torus starting at the cut line; the matching
// seam sits at k + ceil(L/2). A "deformed" cut may take arbitrary real values
// on sites within distance < R0 of an anchor and must agree with the step
// elsewhere.
struct CutFunction {
  int dir = 1;  // 1 or 2
  int k = 0;

  // Deformation payload (empty for a sharp step).
  std::optional<Site> anchor;
  int R0 = 3;
  std::unordered_map<int, double> values;  // site index -> value where deformed

  static CutFunction step(int dir, int k);
  static CutFunction deformed(int dir, int k, Site anchor, int R0,
                              std::unordered_map<int, double> values,
                              const LatticeSpec& lat);

  bool is_step() const { return !anchor.has_value(); }
  double eval(const LatticeSpec& lat, Site x) const;
  double step_eval(const LatticeSpec& lat, Site x) const;
  // Deviation from the underlying sharp step (zero for step cuts).
  double delta(const LatticeSpec& lat, int site_index) const;
};

// Crossing orientation of the shortest traversal from site `a` to site `b`
// against the cut line at k (direction dir): +1 if the traversal passes the
// line in the positive direction, -1 negative, 0 if it does not cross. The
// displacement tie at exactly L/2 is resolved by traversing from the smaller
// stored coordinate without wrapping, which keeps crossing(a,b) = -crossing(b,a).
int cut_crossing(const LatticeSpec& lat, int dir, int k, int a, int b);

// (2M+1) x (2M+1) box of sites: k-M <= x1 <= k+M, l <= x2 <= l+2M, wrapped.
struct Region {
  int k = 0;
  int l = 0;
  int M = 0;

  std::vector<int> sites(const LatticeSpec& lat) const;
  void validate(const LatticeSpec& lat) const;
};

}  // namespace halled
