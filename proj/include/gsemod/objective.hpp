#pragma once

#include <array>
#include <cstddef>

#include "gsemod/bitstring.hpp"

namespace gsemod {

struct ObjectiveValue {
  int ones = 0;
  int zeros = 0;

  std::array<int, 2> components() const noexcept { return {ones, zeros}; }
  friend bool operator==(const ObjectiveValue&, const ObjectiveValue&) = default;
};

// Pareto dominance for maximization: a >= b in every component and > in one.
template <std::size_t K>
constexpr bool dominates(const std::array<int, K>& a, const std::array<int, K>& b) noexcept {
  bool strict = false;
  for (std::size_t k = 0; k < K; ++k) {
    if (a[k] < b[k]) return false;
    if (a[k] > b[k]) strict = true;
  }
  return strict;
}

template <class Fitness>
  requires requires(const Fitness& f) { f.components(); }
constexpr bool dominates(const Fitness& a, const Fitness& b) noexcept {
  return dominates(a.components(), b.components());
}

inline ObjectiveValue one_min_max(const BitString& x) noexcept {
  const int ones = static_cast<int>(x.count());
  return {ones, static_cast<int>(x.size()) - ones};
}

// Problem adapter consumed by Archive. A problem maps a bit string to a
// fitness and each fitness to a slot key in [0, key_count()).
struct OneMinMax {
  using Fitness = ObjectiveValue;

  std::size_t n = 0;

  Fitness evaluate(const BitString& x) const noexcept { return one_min_max(x); }
  std::size_t key(const Fitness& f) const noexcept { return static_cast<std::size_t>(f.ones); }
  std::size_t key_count() const noexcept { return n + 1; }
};

}  // namespace gsemod
