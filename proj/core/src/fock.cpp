#include "halled/fock.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "halled/errors.hpp"

namespace halled {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    // r * num / i is integral at every step; guard the product.
    if (r > (1ull << 62) / num)
      throw ResourceError("binomial(" + std::to_string(n) + "," +
                          std::to_string(k) + ") overflows");
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

FockBasis build_basis(const LatticeSpec& lat, int N) {
  lat.validate();
  int n = lat.n_sites();
  if (n > 62) throw ResourceError("lattice exceeds 62 sites (mask width)");
  if (N < 0 || N > n)
    throw ConfigError("particle number " + std::to_string(N) +
                      " outside [0, " + std::to_string(n) + "]");
  std::uint64_t dim = binomial(n, N);
  if (dim > (1ull << 31))
    throw ResourceError("basis dimension " + std::to_string(dim) +
                        " too large");
  FockBasis basis;
  basis.n_sites = n;
  basis.N = N;
  basis.masks.reserve(dim);
  if (N == 0) {
    basis.masks.push_back(0);
    return basis;
  }
  // Gosper's hack enumerates same-popcount masks in increasing order.
  std::uint64_t m = (1ull << N) - 1;
  std::uint64_t limit = (n == 62) ? 0 : (1ull << n);
  while (n == 62 ? (m >> 62) == 0 : m < limit) {
    basis.masks.push_back(m);
    std::uint64_t c = m & (~m + 1);
    std::uint64_t r = m + c;
    if (r == 0) break;
    m = (((r ^ m) >> 2) / c) | r;
  }
  return basis;
}

int FockBasis::index_of(std::uint64_t mask) const {
  auto it = std::lower_bound(masks.begin(), masks.end(), mask);
  if (it == masks.end() || *it != mask) return -1;
  return static_cast<int>(it - masks.begin());
}

std::uint64_t between_mask(int a, int b) {
  if (a > b) std::swap(a, b);
  if (b - a <= 1) return 0;
  // bits (a, b) exclusive
  std::uint64_t hi = (b >= 64) ? ~0ull : ((1ull << b) - 1);
  std::uint64_t lo = (1ull << (a + 1)) - 1;
  return hi & ~lo;
}

std::optional<HopResult> matrix_element_hop(std::uint64_t mask, int x, int y) {
  if (!((mask >> y) & 1ull)) return std::nullopt;
  if (x == y) return HopResult{mask, +1};
  std::uint64_t m1 = mask & ~(1ull << y);
  if ((m1 >> x) & 1ull) return std::nullopt;
  std::uint64_t m2 = m1 | (1ull << x);
  int parity = std::popcount(mask & between_mask(x, y)) & 1;
  return HopResult{m2, parity ? -1 : +1};
}

}  // namespace halled
