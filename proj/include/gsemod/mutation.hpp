#pragma once

#include <cstddef>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "gsemod/bitstring.hpp"
#include "gsemod/random.hpp"

namespace gsemod {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Flips every bit independently with probability exactly 1/n.
// Draw order: one RandomSource::one_in(n) per index, ascending from index 0.
inline void mutate_in_place(BitString& x, RandomSource& rng) {
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (rng.one_in(n)) x.flip(k);
  }
}

inline BitString standard_bit_mutation(const BitString& x, RandomSource& rng) {
  BitString y = x;
  mutate_in_place(y, rng);
  return y;
}

// (1/n)^h (1 - 1/n)^(n-h) = (n-1)^(n-h) / n^n.
inline Rational mutation_probability_at_distance(std::size_t n, std::size_t h) {
  if (n < 2) throw std::invalid_argument("mutation_probability needs n >= 2");
  if (h > n) throw std::invalid_argument("Hamming distance exceeds the string length");
  const BigInt numerator = boost::multiprecision::pow(BigInt(n - 1), static_cast<unsigned>(n - h));
  const BigInt denominator = boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(n));
  return Rational(numerator, denominator);
}

// Exact probability that standard bit mutation turns x into y.
inline Rational mutation_probability(const BitString& x, const BitString& y) {
  return mutation_probability_at_distance(x.size(), hamming(x, y));
}

}  // namespace gsemod
