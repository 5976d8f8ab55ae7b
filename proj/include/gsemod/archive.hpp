#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gsemod/bitstring.hpp"
#include "gsemod/diversity.hpp"
#include "gsemod/objective.hpp"
#include "gsemod/random.hpp"

namespace gsemod {

enum class AcceptanceKind {
  kReplacedSameFitness,
  kInsertedNewFitness,
  kRejectedDiversity,
  kRejectedDominated,
};

inline std::string_view to_string(AcceptanceKind kind) {
  switch (kind) {
    case AcceptanceKind::kReplacedSameFitness: return "replaced-same-fitness";
    case AcceptanceKind::kInsertedNewFitness: return "inserted-new-fitness";
    case AcceptanceKind::kRejectedDiversity: return "rejected-diversity";
    case AcceptanceKind::kRejectedDominated: return "rejected-dominated";
  }
  return "unknown";
}

struct AcceptanceOutcome {
  AcceptanceKind kind = AcceptanceKind::kRejectedDominated;
  std::optional<std::size_t> replaced_index;  // slot key of the replaced individual
  Diversity diversity_after = 0;
  bool changed = false;       // the population differs afterwards
  std::size_t removed = 0;    // dominated individuals dropped by an insertion

  bool accepted() const noexcept {
    return kind == AcceptanceKind::kReplacedSameFitness || kind == AcceptanceKind::kInsertedNewFitness;
  }
};

template <class P>
concept ArchiveProblem = requires(const P& p, const BitString& x, const typename P::Fitness& f) {
  { p.evaluate(x) } -> std::same_as<typename P::Fitness>;
  { p.key(f) } -> std::convertible_to<std::size_t>;
  { p.key_count() } -> std::convertible_to<std::size_t>;
  { dominates(f, f) } -> std::convertible_to<bool>;
};

// GSEMO_D population: at most one individual per fitness value, kept in the
// slot p.key(fitness). Column counts and the total Hamming distance are kept
// up to date on every change.
template <ArchiveProblem Problem>
class Archive {
 public:
  using Fitness = typename Problem::Fitness;

  Archive(Problem problem, const BitString& first) : problem_(std::move(problem)) {
    init_storage(first.size());
    place(first);
  }

  // Builds an archive holding exactly `population`, which must have distinct
  // fitness values none of which dominates another.
  Archive(Problem problem, std::span<const BitString> population) : problem_(std::move(problem)) {
    if (population.empty()) throw std::invalid_argument("Archive needs at least one individual");
    init_storage(population.front().size());
    for (const auto& x : population) {
      const Fitness f = problem_.evaluate(x);
      const std::size_t key = problem_.key(f);
      if (present_[key]) throw std::invalid_argument("two individuals share a fitness value: " + x.to_string());
      for (std::size_t other : keys_) {
        if (dominates(fitness_[other], f) || dominates(f, fitness_[other])) {
          throw std::invalid_argument("population contains a dominated individual: " + x.to_string());
        }
      }
      place(x);
    }
  }

  const Problem& problem() const noexcept { return problem_; }
  std::size_t n() const noexcept { return counts_.n(); }
  std::size_t size() const noexcept { return keys_.size(); }
  std::size_t slot_count() const noexcept { return slots_.size(); }
  bool contains(std::size_t key) const noexcept { return key < present_.size() && present_[key]; }

  const BitString& at(std::size_t key) const {
    if (!contains(key)) throw std::out_of_range("archive slot " + std::to_string(key) + " is empty");
    return slots_[key];
  }

  // Index = slot key. Empty slots hold an all-zero placeholder; check contains().
  std::span<const BitString> slots() const noexcept { return slots_; }

  // Present slot keys, ascending.
  std::span<const std::size_t> keys() const noexcept { return keys_; }

  std::vector<BitString> individuals() const {
    std::vector<BitString> out;
    out.reserve(keys_.size());
    for (std::size_t key : keys_) out.push_back(slots_[key]);
    return out;
  }

  const ColumnCounts& counts() const noexcept { return counts_; }
  Diversity diversity() const noexcept { return diversity_; }

  // Uniform over present individuals. Draw order: one RandomSource::index(size()).
  const BitString& select_parent(RandomSource& rng) const { return slots_[keys_[rng.index(keys_.size())]]; }

  // What offer(y) would do, without changing the archive.
  AcceptanceOutcome preview(const BitString& y) const {
    const Fitness f = problem_.evaluate(y);
    const std::size_t key = problem_.key(f);
    AcceptanceOutcome out;
    if (present_[key]) {
      const BitString& incumbent = slots_[key];
      const Diversity delta = counts_.replacement_delta(incumbent, y);
      if (delta >= 0) {
        out.kind = AcceptanceKind::kReplacedSameFitness;
        out.replaced_index = key;
        out.diversity_after = diversity_ + delta;
        out.changed = !(incumbent == y);
      } else {
        out.kind = AcceptanceKind::kRejectedDiversity;
        out.diversity_after = diversity_;
      }
      return out;
    }
    for (std::size_t other : keys_) {
      if (dominates(fitness_[other], f)) {
        out.kind = AcceptanceKind::kRejectedDominated;
        out.diversity_after = diversity_;
        return out;
      }
    }
    ColumnCounts next = counts_;
    next.add(y);
    for (std::size_t other : keys_) {
      if (dominates(f, fitness_[other])) {
        next.remove(slots_[other]);
        ++out.removed;
      }
    }
    out.kind = AcceptanceKind::kInsertedNewFitness;
    out.diversity_after = total_hamming(next);
    out.changed = true;
    return out;
  }

  AcceptanceOutcome offer(const BitString& y) {
    AcceptanceOutcome out = preview(y);
    if (out.kind == AcceptanceKind::kReplacedSameFitness) {
      if (out.changed) {
        BitString& incumbent = slots_[*out.replaced_index];
        counts_.replace(incumbent, y);
        incumbent = y;
        diversity_ = out.diversity_after;
      }
    } else if (out.kind == AcceptanceKind::kInsertedNewFitness) {
      const Fitness f = problem_.evaluate(y);
      std::vector<std::size_t> dominated;
      for (std::size_t other : keys_) {
        if (dominates(f, fitness_[other])) dominated.push_back(other);
      }
      for (std::size_t other : dominated) erase(other);
      place(y);
      diversity_ = total_hamming(counts_);
    }
    return out;
  }

  // One line per individual, ascending slot key, textual bit strings.
  std::string snapshot() const {
    std::ostringstream os;
    for (std::size_t key : keys_) os << slots_[key].to_string() << '\n';
    return os.str();
  }

 private:
  void init_storage(std::size_t n) {
    if (n == 0) throw std::invalid_argument("bit strings must have length n >= 1");
    const std::size_t slots = problem_.key_count();
    slots_.assign(slots, BitString(n));
    fitness_.assign(slots, Fitness{});
    present_.assign(slots, 0);
    counts_ = ColumnCounts(n);
  }

  void place(const BitString& x) {
    if (x.size() != counts_.n()) throw std::invalid_argument("bit string length does not match the archive");
    const Fitness f = problem_.evaluate(x);
    const std::size_t key = problem_.key(f);
    slots_[key] = x;
    fitness_[key] = f;
    present_[key] = 1;
    keys_.insert(std::lower_bound(keys_.begin(), keys_.end(), key), key);
    counts_.add(x);
    diversity_ = total_hamming(counts_);
  }

  void erase(std::size_t key) {
    counts_.remove(slots_[key]);
    present_[key] = 0;
    keys_.erase(std::lower_bound(keys_.begin(), keys_.end(), key));
  }

  Problem problem_;
  std::vector<BitString> slots_;
  std::vector<Fitness> fitness_;
  std::vector<char> present_;
  std::vector<std::size_t> keys_;
  ColumnCounts counts_;
  Diversity diversity_ = 0;
};

using OneMinMaxArchive = Archive<OneMinMax>;

inline OneMinMaxArchive new_archive(const BitString& x) { return OneMinMaxArchive(OneMinMax{x.size()}, x); }

inline OneMinMaxArchive archive_from_population(std::span<const BitString> population) {
  if (population.empty()) throw std::invalid_argument("empty population");
  return OneMinMaxArchive(OneMinMax{population.front().size()}, population);
}

inline bool is_front_covered(const OneMinMaxArchive& a) noexcept { return a.size() == a.n() + 1; }

inline bool is_optimal(const OneMinMaxArchive& a) {
  const auto n = static_cast<std::int64_t>(a.n());
  return is_front_covered(a) && a.diversity() == max_diversity(n, n + 1);
}

// Inverse of Archive::snapshot(); blank lines are ignored.
inline std::vector<BitString> parse_population(std::string_view text) {
  std::vector<BitString> population;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (!line.empty()) population.push_back(BitString::from_string(line));
    start = end + 1;
  }
  return population;
}

}  // namespace gsemod
