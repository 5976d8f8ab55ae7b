#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gsemod/bitstring.hpp"

namespace gsemod {

using Diversity = std::int64_t;

// Per-position one-counts m_k of a population of size m. Total Hamming
// distance is sum_k m_k (m - m_k), so replacing or adding an individual only
// touches the positions it changes.
class ColumnCounts {
 public:
  ColumnCounts() = default;
  explicit ColumnCounts(std::size_t n) : counts_(n, 0) {}

  std::size_t n() const noexcept { return counts_.size(); }
  std::size_t population_size() const noexcept { return m_; }
  std::int64_t operator[](std::size_t k) const noexcept { return counts_[k]; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }

  void add(const BitString& x) {
    require_length(x);
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += x.test(k) ? 1 : 0;
    ++m_;
  }

  void remove(const BitString& x) {
    require_length(x);
    if (m_ == 0) throw std::logic_error("ColumnCounts::remove on an empty population");
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] -= x.test(k) ? 1 : 0;
    --m_;
  }

  // D(P ∪ {new} \ {old}) - D(P), old being a member. O(number of changed bits).
  Diversity replacement_delta(const BitString& old_x, const BitString& new_x) const {
    require_length(old_x);
    const auto m = static_cast<std::int64_t>(m_);
    Diversity delta = 0;
    old_x.for_each_difference(new_x, [&](std::size_t k) {
      const std::int64_t c = counts_[k];
      const std::int64_t next = old_x.test(k) ? c - 1 : c + 1;
      delta += next * (m - next) - c * (m - c);
    });
    return delta;
  }

  void replace(const BitString& old_x, const BitString& new_x) {
    require_length(old_x);
    old_x.for_each_difference(new_x, [&](std::size_t k) { counts_[k] += old_x.test(k) ? -1 : 1; });
  }

  std::int64_t total_ones() const noexcept {
    std::int64_t total = 0;
    for (auto c : counts_) total += c;
    return total;
  }

  friend bool operator==(const ColumnCounts&, const ColumnCounts&) = default;

 private:
  void require_length(const BitString& x) const {
    if (x.size() != counts_.size()) throw std::invalid_argument("bit string length does not match the counts");
  }

  std::vector<std::int64_t> counts_;
  std::size_t m_ = 0;
};

inline ColumnCounts column_counts(std::span<const BitString> population) {
  if (population.empty()) throw std::invalid_argument("column_counts of an empty population");
  ColumnCounts counts(population.front().size());
  for (const auto& x : population) counts.add(x);
  return counts;
}

inline Diversity total_hamming(const ColumnCounts& counts) {
  const auto m = static_cast<std::int64_t>(counts.population_size());
  Diversity total = 0;
  for (auto c : counts.counts()) total += c * (m - c);
  return total;
}

// Sum of Hamming distances over unordered pairs; the direct definition.
inline Diversity pairwise_total_hamming(std::span<const BitString> population) {
  Diversity total = 0;
  for (std::size_t a = 0; a < population.size(); ++a) {
    for (std::size_t b = a + 1; b < population.size(); ++b) {
      total += static_cast<Diversity>(hamming(population[a], population[b]));
    }
  }
  return total;
}

inline Diversity diversity_delta(const ColumnCounts& counts, const BitString& old_x, const BitString& new_x) {
  return counts.replacement_delta(old_x, new_x);
}

// Largest total Hamming distance of m strings of length n.
constexpr Diversity max_diversity(std::int64_t n, std::int64_t m) {
  if (n < 1 || m < 1) throw std::invalid_argument("max_diversity needs n >= 1 and m >= 1");
  return m % 2 == 0 ? m * m * n / 4 : n * (m * m - 1) / 4;
}

}  // namespace gsemod
