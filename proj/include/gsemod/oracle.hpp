#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gsemod/bitstring.hpp"
#include "gsemod/classifier.hpp"
#include "gsemod/diversity.hpp"
#include "gsemod/mutation.hpp"

// Brute-force ground truth for small n. Everything here is computed from the
// pairwise definition of the total Hamming distance and exact rationals; it
// shares no code path with ColumnCounts or the archive.

namespace gsemod::oracle {

inline constexpr std::size_t kEnumerationLimit = 13;
inline constexpr std::size_t kPopulationEnumerationLimit = 5;

struct ReplacementReport {
  std::size_t index = 0;
  std::vector<BitString> valid_set;      // accepted replacements other than x_i, sorted
  std::vector<BitString> improving_set;  // subset reaching the maximal diversity
  Rational replace_prob{0};
  Rational improve_prob{0};
};

// Calls fn(y) for every length-n string with exactly `ones` one-bits.
template <class Fn>
void for_each_level_string(std::size_t n, std::size_t ones, Fn&& fn) {
  if (n > 63) throw std::length_error("level enumeration supports n <= 63");
  if (ones > n) return;
  if (ones == 0) {
    fn(BitString(n));
    return;
  }
  std::uint64_t mask = (std::uint64_t{1} << ones) - 1;
  const std::uint64_t limit = std::uint64_t{1} << n;
  while (mask < limit) {
    fn(BitString::from_mask(n, mask));
    // Gosper's hack: next larger integer with the same popcount.
    const std::uint64_t c = mask & (0 - mask);
    const std::uint64_t r = mask + c;
    mask = (((r ^ mask) >> 2) / c) | r;
  }
}

inline void require_covering(std::span<const BitString> levels) {
  if (levels.size() < 2) throw std::invalid_argument("oracle needs n >= 1");
  const std::size_t n = levels.size() - 1;
  for (std::size_t i = 0; i <= n; ++i) {
    if (levels[i].size() != n || levels[i].count() != i) {
      throw std::invalid_argument("levels[i] must have length n and exactly i one-bits");
    }
  }
  if (n > kEnumerationLimit) {
    throw std::length_error("oracle enumeration is limited to n <= " + std::to_string(kEnumerationLimit));
  }
}

namespace detail {

// sum over parents j of (n-1)^(n - H(x_j, y)); divided by (n+1) n^n this is
// the probability that one iteration produces y.
inline BigInt production_weight(std::span<const BitString> levels, const BitString& y,
                                std::span<const BigInt> weight_by_distance) {
  BigInt total = 0;
  for (const auto& parent : levels) total += weight_by_distance[hamming(parent, y)];
  return total;
}

inline std::vector<BigInt> weights_by_distance(std::size_t n) {
  std::vector<BigInt> w(n + 1);
  for (std::size_t h = 0; h <= n; ++h) w[h] = boost::multiprecision::pow(BigInt(n - 1), static_cast<unsigned>(n - h));
  return w;
}

inline BigInt iteration_denominator(std::size_t n) {
  return BigInt(n + 1) * boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(n));
}

}  // namespace detail

// Enumerates every y with i one-bits, y != x_i, and keeps those whose
// replacement of x_i does not lower the total Hamming distance.
// with_probabilities also fills the exact one-iteration probabilities.
inline ReplacementReport replacement_report(std::span<const BitString> levels, std::size_t i,
                                            bool with_probabilities = true) {
  require_covering(levels);
  const std::size_t n = levels.size() - 1;
  if (i > n) throw std::out_of_range("index outside [0..n]");
  if (with_probabilities && n < 2) throw std::invalid_argument("probabilities need n >= 2");
  const Diversity current = pairwise_total_hamming(levels);
  const Diversity best = max_diversity(static_cast<std::int64_t>(n), static_cast<std::int64_t>(n + 1));
  const BitString& incumbent = levels[i];

  ReplacementReport report;
  report.index = i;
  for_each_level_string(n, i, [&](const BitString& y) {
    if (y == incumbent) return;
    Diversity delta = 0;
    for (std::size_t j = 0; j <= n; ++j) {
      if (j == i) continue;
      delta += static_cast<Diversity>(hamming(y, levels[j])) - static_cast<Diversity>(hamming(incumbent, levels[j]));
    }
    if (delta < 0) return;
    report.valid_set.push_back(y);
    if (current + delta == best) report.improving_set.push_back(y);
  });
  std::sort(report.valid_set.begin(), report.valid_set.end());
  std::sort(report.improving_set.begin(), report.improving_set.end());

  if (with_probabilities) {
    const auto weights = detail::weights_by_distance(n);
    const BigInt denominator = detail::iteration_denominator(n);
    BigInt replace = 0;
    BigInt improve = 0;
    for (const auto& y : report.valid_set) replace += detail::production_weight(levels, y, weights);
    for (const auto& y : report.improving_set) improve += detail::production_weight(levels, y, weights);
    report.replace_prob = Rational(replace, denominator);
    report.improve_prob = Rational(improve, denominator);
  }
  return report;
}

inline ReplacementReport valid_replacements(std::span<const BitString> levels, std::size_t i) {
  return replacement_report(levels, i, false);
}

inline Rational exact_replace_prob(std::span<const BitString> levels, std::size_t i) {
  return replacement_report(levels, i).replace_prob;
}

// Probability that one iteration yields a population of maximal diversity.
// Zero for a population that is already optimal.
inline Rational exact_optimal_prob(std::span<const BitString> levels) {
  require_covering(levels);
  const std::size_t n = levels.size() - 1;
  const Diversity best = max_diversity(static_cast<std::int64_t>(n), static_cast<std::int64_t>(n + 1));
  if (pairwise_total_hamming(levels) == best) return Rational(0);
  Rational total = 0;
  for (std::size_t i = 0; i <= n; ++i) total += replacement_report(levels, i).improve_prob;
  return total;
}

// Maximum total Hamming distance over all populations covering the front.
inline Diversity brute_force_max_diversity(std::size_t n) {
  if (n < 1 || n > kPopulationEnumerationLimit) {
    throw std::length_error("population enumeration is limited to 1 <= n <= " +
                            std::to_string(kPopulationEnumerationLimit));
  }
  std::vector<std::vector<BitString>> choices(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    for_each_level_string(n, i, [&](const BitString& y) { choices[i].push_back(y); });
  }
  std::vector<std::size_t> pick(n + 1, 0);
  std::vector<BitString> population(n + 1);
  Diversity best = -1;
  while (true) {
    for (std::size_t i = 0; i <= n; ++i) population[i] = choices[i][pick[i]];
    best = std::max(best, pairwise_total_hamming(population));
    std::size_t level = 0;
    while (level <= n && ++pick[level] == choices[level].size()) pick[level++] = 0;
    if (level > n) break;
  }
  return best;
}

enum class TableRow : std::uint8_t { kI01, kI00NotJ00, kJ00, kI11NotJ11, kJ11, kI10NotJ10, kJ10 };
enum class BoundKind : std::uint8_t { kReplaceLower, kReplaceUpper, kImproveLower, kExactZero };

inline std::string_view to_string(TableRow row) {
  switch (row) {
    case TableRow::kI01: return "I01";
    case TableRow::kI00NotJ00: return "I00\\J00";
    case TableRow::kJ00: return "J00";
    case TableRow::kI11NotJ11: return "I11\\J11";
    case TableRow::kJ11: return "J11";
    case TableRow::kI10NotJ10: return "I10\\J10";
    case TableRow::kJ10: return "J10";
  }
  return "?";
}

inline std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::kReplaceLower: return "replace>=";
    case BoundKind::kReplaceUpper: return "replace<=";
    case BoundKind::kImproveLower: return "improve>=";
    case BoundKind::kExactZero: return "zero";
  }
  return "?";
}

struct BoundCheck {
  std::size_t index = 0;
  TableRow row = TableRow::kI01;
  BoundKind kind = BoundKind::kExactZero;
  double value = 0;
  double limit = 0;
  bool pass = true;
};

inline TableRow table_row(const Classification& cl, std::size_t i) {
  switch (cl.index_class[i]) {
    case IndexClass::k01: return TableRow::kI01;
    case IndexClass::k00: return cl.in(i, JSet::kJ00) ? TableRow::kJ00 : TableRow::kI00NotJ00;
    case IndexClass::k11: return cl.in(i, JSet::kJ11) ? TableRow::kJ11 : TableRow::kI11NotJ11;
    case IndexClass::k10: return cl.in(i, JSet::kJ10) ? TableRow::kJ10 : TableRow::kI10NotJ10;
  }
  return TableRow::kI01;
}

// Compares exact replacement / improvement probabilities with the per-class
// bounds. Each (1 - O(1/n)) factor becomes (1 - slack/n) and each
// (1 + O(1/n)) becomes (1 + slack/n); the 13/n^2 cap is used as is.
inline std::vector<BoundCheck> check_table1_bounds(std::span<const BitString> levels, const Classification& cl,
                                                   std::span<const ReplacementReport> reports, double slack) {
  const std::size_t n = levels.size() - 1;
  const double nn = static_cast<double>(n);
  const double e = std::numbers::e;
  const double lower = 1.0 - slack / nn;
  const double upper = 1.0 + slack / nn;
  std::vector<BoundCheck> checks;
  for (std::size_t i = 0; i <= n; ++i) {
    const TableRow row = table_row(cl, i);
    const double replace = static_cast<double>(reports[i].replace_prob);
    const double improve = static_cast<double>(reports[i].improve_prob);
    const double ii = static_cast<double>(i);
    auto at_least = [&](BoundKind kind, double value, double limit) {
      checks.push_back({i, row, kind, value, limit, value >= limit});
    };
    auto at_most = [&](double limit) { checks.push_back({i, row, BoundKind::kReplaceUpper, replace, limit, replace <= limit}); };
    auto zero = [&](double value) { checks.push_back({i, row, BoundKind::kExactZero, value, 0.0, value == 0.0}); };
    switch (row) {
      case TableRow::kI01:
        zero(replace);
        zero(improve);
        break;
      case TableRow::kI00NotJ00:
        at_least(BoundKind::kReplaceLower, replace, ii / (e * nn * nn * nn) * lower);
        at_most(7.0 / (e * nn * nn) * upper);
        zero(improve);
        break;
      case TableRow::kJ00:
        at_least(BoundKind::kReplaceLower, replace, ii / (e * nn * nn) * lower);
        at_most((ii + 2.0) / (e * nn * nn) * upper);
        zero(improve);
        break;
      case TableRow::kI11NotJ11:
        at_least(BoundKind::kReplaceLower, replace, (nn - ii) / (e * nn * nn * nn) * lower);
        at_most(7.0 / (e * nn * nn) * upper);
        zero(improve);
        break;
      case TableRow::kJ11:
        at_least(BoundKind::kReplaceLower, replace, (nn - ii) / (e * nn * nn) * lower);
        at_most((nn - ii + 2.0) / (e * nn * nn) * upper);
        zero(improve);
        break;
      case TableRow::kI10NotJ10:
        at_least(BoundKind::kReplaceLower, replace, 1.0 / (2.0 * e * nn * nn) * lower);
        at_most(13.0 / (nn * nn));
        at_least(BoundKind::kImproveLower, improve, lower / (e * nn * nn * nn));
        break;
      case TableRow::kJ10:
        at_least(BoundKind::kReplaceLower, replace, (std::min(nn - ii, ii) + 1.0) / (e * nn * nn) * lower);
        at_most(2.0 / nn * upper);
        at_least(BoundKind::kImproveLower, improve, lower / (e * nn * nn));
        break;
    }
  }
  return checks;
}

inline std::vector<BoundCheck> check_table1_bounds(std::span<const BitString> levels, double slack) {
  require_covering(levels);
  const PositionBalance pb = classify_positions(column_counts(levels));
  const Classification cl = classify(levels, pb);
  std::vector<ReplacementReport> reports;
  for (std::size_t i = 0; i < levels.size(); ++i) reports.push_back(replacement_report(levels, i));
  return check_table1_bounds(levels, cl, reports, slack);
}

}  // namespace gsemod::oracle
