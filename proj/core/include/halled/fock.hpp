#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "halled/lattice.hpp"

namespace halled {

// Occupation-number basis of the fixed-N sector. Masks are |Lambda|-bit
// integers with popcount N, stored in strictly increasing order; site s
// occupies bit s of the mask (s = row-major lattice index).
struct FockBasis {
  int n_sites = 0;
  int N = 0;
  std::vector<std::uint64_t> masks;

  int dim() const { return static_cast<int>(masks.size()); }

  // Ordinal of a mask in the canonical order, or -1 when absent.
  int index_of(std::uint64_t mask) const;

  bool occupied(int row, int site) const {
    return (masks[static_cast<std::size_t>(row)] >> site) & 1ull;
  }
};

// C(n, k) with overflow detection (throws ResourceError past 2^62).
std::uint64_t binomial(int n, int k);

// Canonical N-particle basis on the lattice. Deterministic across runs.
FockBasis build_basis(const LatticeSpec& lat, int N);

// Bitmask of sites strictly between a and b in the canonical site order.
std::uint64_t between_mask(int a, int b);

struct HopResult {
  std::uint64_t mask;
  int sign;  // +1 or -1
};

// Action of c^dag_x c_y on |mask>. Returns the target mask and the
// Jordan-Wigner sign (parity of occupied sites strictly between x and y),
// or nullopt when y is empty or x is already occupied (x != y).
// x == y is the number operator: (mask, +1) when occupied, else nullopt.
std::optional<HopResult> matrix_element_hop(std::uint64_t mask, int x, int y);

}  // namespace halled
