#pragma once

#include <bit>
#include <cstdint>
#include <vector>

// Vertex-subset and assignment bookkeeping shared by the pseudo-marginal
// machinery.
//
// Conventions used everywhere in the library:
//  * a subset S of vertices is a bitmask (bit v set <=> vertex v in S);
//  * the vertices of S are implicitly sorted ascending, and "position" means
//    the rank of a vertex inside that sorted order;
//  * an assignment over S is an integer a in [0, 2^|S|): bit t of a is the
//    spin of the vertex at position t, with bit 0 <-> spin -1 and
//    bit 1 <-> spin +1.

namespace isingbound {

using mask_t = std::uint64_t;

inline int popcount(mask_t m) { return std::popcount(m); }

// Rank of vertex v inside the sorted vertex list of S.  v need not be in S.
inline int rank_in(mask_t s, int v) {
  return std::popcount(s & ((mask_t{1} << v) - 1));
}

// Spin (+1/-1) of the vertex at position `pos` under assignment `a`.
inline double spin_at(std::uint32_t a, int pos) {
  return (a >> pos) & 1u ? 1.0 : -1.0;
}

// Insert a bit with value `bit` at position `pos`, shifting higher bits up.
// Maps an assignment over S to one over S u {v} when pos = rank_in(S, v).
inline std::uint32_t insert_bit(std::uint32_t a, int pos, int bit) {
  const std::uint32_t low = a & ((1u << pos) - 1u);
  const std::uint32_t high = a >> pos;
  return (high << (pos + 1)) | (static_cast<std::uint32_t>(bit) << pos) | low;
}

// Remove the bit at position `pos`, shifting higher bits down.  Maps an
// assignment over S to one over S \ {v} when pos = rank_in(S, v).
inline std::uint32_t remove_bit(std::uint32_t a, int pos) {
  const std::uint32_t low = a & ((1u << pos) - 1u);
  const std::uint32_t high = a >> (pos + 1);
  return (high << pos) | low;
}

inline std::vector<int> vertices_of(mask_t s) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(std::popcount(s)));
  while (s != 0) {
    out.push_back(std::countr_zero(s));
    s &= s - 1;
  }
  return out;
}

// All nonempty subsets of {0..n-1} with at most max_size vertices, ordered
// by size and then lexicographically by sorted vertex list.  This order is
// load-bearing: table layouts, LP columns, and argmin tie-breaks all follow
// it, which keeps every downstream computation deterministic.
inline std::vector<mask_t> subsets_by_size(int n, int max_size) {
  std::vector<mask_t> out;
  std::vector<int> pick;
  for (int m = 1; m <= max_size; ++m) {
    pick.assign(static_cast<std::size_t>(m), 0);
    // Iterative lexicographic enumeration of m-combinations of {0..n-1}.
    for (int i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = i;
    if (m > n) break;
    while (true) {
      mask_t s = 0;
      for (int v : pick) s |= mask_t{1} << v;
      out.push_back(s);
      int i = m - 1;
      while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - m + i) --i;
      if (i < 0) break;
      ++pick[static_cast<std::size_t>(i)];
      for (int t = i + 1; t < m; ++t)
        pick[static_cast<std::size_t>(t)] = pick[static_cast<std::size_t>(t - 1)] + 1;
    }
  }
  return out;
}

// Character chi_U(a) = product of spins at the positions in `upos` (a mask of
// positions, not vertices).  Equals -1 to the number of zero bits of `a`
// inside upos.
inline double character(std::uint32_t upos, std::uint32_t a) {
  return (std::popcount(upos & ~a) & 1) ? -1.0 : 1.0;
}

// Gathers the bits of `a` at the positions in `posmask` into a compact
// value (software PEXT).  Maps an assignment over T to one over a subset
// whose vertices sit at those positions of T.
inline std::uint32_t extract_bits(std::uint32_t a, std::uint32_t posmask) {
  std::uint32_t out = 0;
  int outpos = 0;
  while (posmask != 0) {
    const int p = std::countr_zero(posmask);
    out |= ((a >> p) & 1u) << outpos++;
    posmask &= posmask - 1;
  }
  return out;
}

}  // namespace isingbound
