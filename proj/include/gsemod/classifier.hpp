#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "gsemod/bitstring.hpp"
#include "gsemod/diversity.hpp"

// Instrumentation of the last optimization stage on OneMinMax, n odd.
//
// A front-covering population is a span `levels` with levels[i] = x_i, the
// individual with i one-bits, i in [0..n]. Positions are 0-based indices
// here; text output adds one.

namespace gsemod {

enum class Balance : std::uint8_t { kBalanced, kAlmostBalanced, kUnbalanced };

struct PositionBalance {
  std::vector<Balance> labels;
  std::optional<std::size_t> hot;   // the only position with (n+3)/2 ones
  std::optional<std::size_t> cold;  // the only position with (n-1)/2 ones

  std::size_t count(Balance b) const noexcept {
    std::size_t total = 0;
    for (auto l : labels) total += l == b ? 1 : 0;
    return total;
  }

  // Exactly two almost balanced positions (one hot, one cold), rest balanced.
  bool almost_balanced() const noexcept {
    return hot && cold && count(Balance::kAlmostBalanced) == 2 && count(Balance::kUnbalanced) == 0;
  }

  bool balanced() const noexcept { return count(Balance::kBalanced) == labels.size(); }
};

inline void require_odd_covering(const ColumnCounts& c) {
  if (c.n() % 2 == 0) throw std::domain_error("position classification needs odd n");
  if (c.population_size() != c.n() + 1) {
    throw std::domain_error("position classification needs a population covering the front (m = n+1)");
  }
}

inline PositionBalance classify_positions(const ColumnCounts& c) {
  require_odd_covering(c);
  const auto n = static_cast<std::int64_t>(c.n());
  const std::int64_t half = (n + 1) / 2;
  PositionBalance pb;
  pb.labels.resize(c.n());
  std::size_t hot_count = 0;
  std::size_t cold_count = 0;
  for (std::size_t k = 0; k < c.n(); ++k) {
    const std::int64_t deviation = c[k] - half;
    if (deviation == 0) {
      pb.labels[k] = Balance::kBalanced;
    } else if (deviation == 1 || deviation == -1) {
      pb.labels[k] = Balance::kAlmostBalanced;
      if (deviation == 1) {
        ++hot_count;
        pb.hot = k;
      } else {
        ++cold_count;
        pb.cold = k;
      }
    } else {
      pb.labels[k] = Balance::kUnbalanced;
    }
  }
  if (hot_count != 1) pb.hot.reset();
  if (cold_count != 1) pb.cold.reset();
  return pb;
}

// Index class by (bit at hot, bit at cold).
enum class IndexClass : std::uint8_t { k01, k00, k11, k10 };

inline std::string_view to_string(IndexClass c) {
  switch (c) {
    case IndexClass::k01: return "01";
    case IndexClass::k00: return "00";
    case IndexClass::k11: return "11";
    case IndexClass::k10: return "10";
  }
  return "??";
}

inline std::optional<IndexClass> index_class_from_string(std::string_view s) {
  if (s == "01") return IndexClass::k01;
  if (s == "00") return IndexClass::k00;
  if (s == "11") return IndexClass::k11;
  if (s == "10") return IndexClass::k10;
  return std::nullopt;
}

enum class JSet : std::uint8_t { kJ00, kJ11, kJ10, kJhot };

enum class State : std::uint8_t { kState1 = 1, kState2 = 2, kState3 = 3 };

// Index sets of an almost balanced population, stored as per-index
// membership so single-index updates are O(1).
struct Classification {
  std::vector<IndexClass> index_class;              // i in [0..n]
  std::vector<std::array<bool, 4>> j_member;        // indexed by JSet
  std::array<std::size_t, 4> class_size{};          // indexed by IndexClass
  std::array<std::size_t, 4> j_size{};              // indexed by JSet

  std::size_t size(IndexClass c) const noexcept { return class_size[static_cast<std::size_t>(c)]; }
  std::size_t size(JSet j) const noexcept { return j_size[static_cast<std::size_t>(j)]; }
  bool in(std::size_t i, JSet j) const noexcept { return j_member[i][static_cast<std::size_t>(j)]; }

  std::vector<std::size_t> members(IndexClass c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < index_class.size(); ++i) {
      if (index_class[i] == c) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> members(JSet j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < j_member.size(); ++i) {
      if (in(i, j)) out.push_back(i);
    }
    return out;
  }

  friend bool operator==(const Classification&, const Classification&) = default;
};

namespace detail {

inline void require_hot_cold(const PositionBalance& pb) {
  if (!pb.hot || !pb.cold) throw std::domain_error("classification needs a population with a hot and a cold position");
}

inline IndexClass class_of(const BitString& x, std::size_t hot, std::size_t cold) noexcept {
  const bool h = x.test(hot);
  const bool c = x.test(cold);
  if (h) return c ? IndexClass::k11 : IndexClass::k10;
  return c ? IndexClass::k01 : IndexClass::k00;
}

// x and y differ exactly at position k.
inline bool differ_only_at(const BitString& x, const BitString& y, std::size_t k) {
  return x.test(k) != y.test(k) && hamming(x, y) == 1;
}

inline std::array<bool, 4> j_flags(std::span<const BitString> levels, std::size_t i, IndexClass cls, std::size_t hot,
                                   std::size_t cold) {
  const std::size_t n = levels.size() - 1;
  std::array<bool, 4> f{};
  const BitString& x = levels[i];
  const bool hot_step = i >= 1 && differ_only_at(x, levels[i - 1], hot);
  f[static_cast<std::size_t>(JSet::kJhot)] = hot_step;
  f[static_cast<std::size_t>(JSet::kJ11)] = cls == IndexClass::k11 && hot_step;
  f[static_cast<std::size_t>(JSet::kJ00)] = cls == IndexClass::k00 && i < n && differ_only_at(x, levels[i + 1], cold);
  if (cls == IndexClass::k10) {
    // x~ = x with hot and cold flipped; S1 = ones of x~, S0 = zeros of x~.
    BitString tilde = x;
    tilde.flip(hot);
    tilde.flip(cold);
    // zeros of x_{i-1} inside S1 / ones of x_{i+1} inside S0
    const bool below = i >= 1 && tilde.count_and_not(levels[i - 1]) == 1;
    const bool above = i < n && levels[i + 1].count_and_not(tilde) == 1;
    f[static_cast<std::size_t>(JSet::kJ10)] = below || above;
  }
  return f;
}

}  // namespace detail

// I sets only; J memberships are left empty.
inline Classification classify_individuals(std::span<const BitString> levels, const PositionBalance& pb) {
  detail::require_hot_cold(pb);
  Classification cl;
  cl.index_class.resize(levels.size());
  cl.j_member.assign(levels.size(), {});
  for (std::size_t i = 0; i < levels.size(); ++i) {
    cl.index_class[i] = detail::class_of(levels[i], *pb.hot, *pb.cold);
    ++cl.class_size[static_cast<std::size_t>(cl.index_class[i])];
  }
  return cl;
}

// Fills the J sets of a classification produced by classify_individuals.
inline void j_sets(std::span<const BitString> levels, const PositionBalance& pb, Classification& cl) {
  detail::require_hot_cold(pb);
  cl.j_size = {};
  for (std::size_t i = 0; i < levels.size(); ++i) {
    cl.j_member[i] = detail::j_flags(levels, i, cl.index_class[i], *pb.hot, *pb.cold);
    for (std::size_t j = 0; j < 4; ++j) cl.j_size[j] += cl.j_member[i][j] ? 1 : 0;
  }
}

inline Classification classify(std::span<const BitString> levels, const PositionBalance& pb) {
  Classification cl = classify_individuals(levels, pb);
  j_sets(levels, pb, cl);
  return cl;
}

// Fractional thresholds are compared exactly: |I10| >= n/32 iff 32|I10| >= n.
inline State state_of(std::size_t i10, std::size_t jhot, std::size_t j00, std::size_t n) noexcept {
  if (32 * i10 >= n && jhot <= 19 && j00 <= 9) return State::kState3;
  if (jhot <= 17) return State::kState2;
  return State::kState1;
}

inline State state_of(const Classification& cl, std::size_t n) noexcept {
  return state_of(cl.size(IndexClass::k10), cl.size(JSet::kJhot), cl.size(JSet::kJ00), n);
}

// Balanced positions k such that at least n/16 individuals with a zero-bit at
// the cold position have a one-bit at k.
inline std::vector<std::size_t> cold_candidates(std::span<const BitString> levels, const PositionBalance& pb) {
  detail::require_hot_cold(pb);
  const std::size_t n = levels.size() - 1;
  std::vector<std::size_t> hits(n, 0);
  for (const auto& x : levels) {
    if (x.test(*pb.cold)) continue;
    for (std::size_t k = 0; k < n; ++k) hits[k] += x.test(k) ? 1 : 0;
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (pb.labels[k] == Balance::kBalanced && 16 * hits[k] >= n) out.push_back(k);
  }
  return out;
}

// Balanced positions k such that at least n/16 individuals with a one-bit at
// the hot position have a zero-bit at k.
inline std::vector<std::size_t> hot_candidates(std::span<const BitString> levels, const PositionBalance& pb) {
  detail::require_hot_cold(pb);
  const std::size_t n = levels.size() - 1;
  std::vector<std::size_t> hits(n, 0);
  for (const auto& x : levels) {
    if (!x.test(*pb.hot)) continue;
    for (std::size_t k = 0; k < n; ++k) hits[k] += x.test(k) ? 0 : 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (pb.labels[k] == Balance::kBalanced && 16 * hits[k] >= n) out.push_back(k);
  }
  return out;
}

// Keeps the classification of a walking population current. A replacement at
// index i only affects J memberships at i-1, i, i+1 unless the hot or cold
// position moves, in which case everything is recomputed.
class ClassificationTracker {
 public:
  void reset(std::span<const BitString> levels, const ColumnCounts& counts) {
    balance_ = classify_positions(counts);
    valid_ = balance_.almost_balanced();
    if (valid_) classification_ = classify(levels, balance_);
  }

  // Call after levels[replaced] changed and counts were updated.
  void update(std::span<const BitString> levels, const ColumnCounts& counts, std::size_t replaced) {
    PositionBalance next = classify_positions(counts);
    const bool same_poles = valid_ && next.almost_balanced() && next.hot == balance_.hot && next.cold == balance_.cold;
    balance_ = std::move(next);
    if (!same_poles) {
      valid_ = balance_.almost_balanced();
      if (valid_) classification_ = classify(levels, balance_);
      return;
    }
    const std::size_t hot = *balance_.hot;
    const std::size_t cold = *balance_.cold;
    auto& cl = classification_;
    --cl.class_size[static_cast<std::size_t>(cl.index_class[replaced])];
    cl.index_class[replaced] = detail::class_of(levels[replaced], hot, cold);
    ++cl.class_size[static_cast<std::size_t>(cl.index_class[replaced])];
    const std::size_t first = replaced == 0 ? 0 : replaced - 1;
    const std::size_t last = std::min(replaced + 1, levels.size() - 1);
    for (std::size_t i = first; i <= last; ++i) {
      for (std::size_t j = 0; j < 4; ++j) cl.j_size[j] -= cl.j_member[i][j] ? 1 : 0;
      cl.j_member[i] = detail::j_flags(levels, i, cl.index_class[i], hot, cold);
      for (std::size_t j = 0; j < 4; ++j) cl.j_size[j] += cl.j_member[i][j] ? 1 : 0;
    }
  }

  bool almost_balanced() const noexcept { return valid_; }
  const PositionBalance& balance() const noexcept { return balance_; }
  const Classification& classification() const noexcept { return classification_; }
  std::optional<State> state() const noexcept {
    if (!valid_) return std::nullopt;
    return state_of(classification_, balance_.labels.size());
  }

 private:
  PositionBalance balance_;
  Classification classification_;
  bool valid_ = false;
};

}  // namespace gsemod
