#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gsemod/archive.hpp"
#include "gsemod/bitstring.hpp"
#include "gsemod/random.hpp"

namespace gsemod {

inline void require_odd(std::size_t n) {
  if (n % 2 == 0) throw std::domain_error("n must be odd");
}

// x_i = 1^i 0^(n-i) for i <= (n-1)/2 and x_i = complement(x_(n-i)) above,
// so every position holds exactly (n+1)/2 ones.
inline std::vector<BitString> optimal_levels(std::size_t n) {
  require_odd(n);
  std::vector<BitString> levels(n + 1, BitString(n));
  for (std::size_t i = 0; i <= (n - 1) / 2; ++i) {
    for (std::size_t k = 0; k < i; ++k) levels[i].set(k);
    levels[n - i] = levels[i].complement();
  }
  return levels;
}

// Same shape as optimal_levels but x_i for i <= (n-1)/2 is a uniformly
// random string with i ones.
inline std::vector<BitString> random_optimal_levels(std::size_t n, RandomSource& rng) {
  require_odd(n);
  std::vector<BitString> levels(n + 1, BitString(n));
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i <= (n - 1) / 2; ++i) {
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    for (std::size_t k = 0; k < i; ++k) {
      std::swap(positions[k], positions[k + rng.index(n - k)]);
      levels[i].set(positions[k]);
    }
    levels[n - i] = levels[i].complement();
  }
  return levels;
}

// Moves one one-bit of x_i from `one_pos` to `zero_pos`. Applied to a
// balanced population this makes one_pos cold and zero_pos hot.
inline void shift_bit(std::vector<BitString>& levels, std::size_t i, std::size_t one_pos, std::size_t zero_pos) {
  BitString& x = levels.at(i);
  if (!x.test(one_pos) || x.test(zero_pos)) throw std::invalid_argument("shift_bit needs a one at one_pos and a zero at zero_pos");
  x.flip(one_pos);
  x.flip(zero_pos);
}

// Picks i uniformly in [1..n-1], then a one-position and a zero-position of
// x_i uniformly, and swaps them. Draw order: below(n-1), index(i), index(n-i).
inline void perturb_to_almost_balanced(std::vector<BitString>& levels, RandomSource& rng) {
  const std::size_t n = levels.size() - 1;
  if (n < 3) throw std::domain_error("an almost balanced population needs n >= 3");
  const std::size_t i = 1 + static_cast<std::size_t>(rng.below(n - 1));
  const BitString& x = levels[i];
  std::vector<std::size_t> ones;
  std::vector<std::size_t> zeros;
  for (std::size_t k = 0; k < n; ++k) (x.test(k) ? ones : zeros).push_back(k);
  const std::size_t a = ones[rng.index(ones.size())];
  const std::size_t b = zeros[rng.index(zeros.size())];
  shift_bit(levels, i, a, b);
}

inline std::vector<BitString> almost_balanced_levels(std::size_t n, RandomSource& rng) {
  require_odd(n);
  auto levels = optimal_levels(n);
  perturb_to_almost_balanced(levels, rng);
  return levels;
}

inline OneMinMaxArchive build_optimal_population(std::size_t n) { return archive_from_population(optimal_levels(n)); }

inline OneMinMaxArchive build_almost_balanced_population(std::size_t n, RandomSource& rng) {
  return archive_from_population(almost_balanced_levels(n, rng));
}

}  // namespace gsemod
