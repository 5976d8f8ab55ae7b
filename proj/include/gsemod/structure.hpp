#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gsemod/classifier.hpp"

namespace gsemod {

// Checks the structural facts every almost balanced population satisfies:
//   |I00| = |I11| <= (n-1)/2,  |I10| = |I01| + 2,  2 <= |I10| <= (n+3)/2,
//   J11 ⊆ Jhot ⊆ J11 ∪ J10,  and, for n >= 5, at least n/8 cold and n/8 hot
//   candidate positions.
// Returns one message per violated fact; empty means all hold.
inline std::vector<std::string> structural_violations(std::span<const BitString> levels, const PositionBalance& pb,
                                                      const Classification& cl) {
  std::vector<std::string> out;
  const std::size_t n = levels.size() - 1;
  const std::size_t i00 = cl.size(IndexClass::k00);
  const std::size_t i11 = cl.size(IndexClass::k11);
  const std::size_t i10 = cl.size(IndexClass::k10);
  const std::size_t i01 = cl.size(IndexClass::k01);
  if (i00 + i11 + i10 + i01 != n + 1) out.push_back("I sets do not partition [0..n]");
  if (i00 != i11) out.push_back("|I00| != |I11|");
  if (2 * i00 > n - 1) out.push_back("|I00| > (n-1)/2");
  if (i10 != i01 + 2) out.push_back("|I10| != |I01| + 2");
  if (i10 < 2 || 2 * i10 > n + 3) out.push_back("|I10| outside [2, (n+3)/2]");
  for (std::size_t i = 0; i <= n; ++i) {
    if (cl.in(i, JSet::kJ11) && !cl.in(i, JSet::kJhot)) out.push_back("J11 not within Jhot at " + std::to_string(i));
    if (cl.in(i, JSet::kJhot) && !cl.in(i, JSet::kJ11) && !cl.in(i, JSet::kJ10)) {
      out.push_back("Jhot not within J11 ∪ J10 at " + std::to_string(i));
    }
    if (cl.in(i, JSet::kJ00) && cl.index_class[i] != IndexClass::k00) out.push_back("J00 not within I00");
    if (cl.in(i, JSet::kJ10) && cl.index_class[i] != IndexClass::k10) out.push_back("J10 not within I10");
  }
  if (n >= 5) {
    if (8 * cold_candidates(levels, pb).size() < n) out.push_back("fewer than n/8 cold candidates");
    if (8 * hot_candidates(levels, pb).size() < n) out.push_back("fewer than n/8 hot candidates");
  }
  return out;
}

}  // namespace gsemod
