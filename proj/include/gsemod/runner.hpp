#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsemod/archive.hpp"
#include "gsemod/classifier.hpp"
#include "gsemod/mutation.hpp"
#include "gsemod/phases.hpp"
#include "gsemod/populations.hpp"
#include "gsemod/random.hpp"
#include "gsemod/structure.hpp"
#include "gsemod/trace.hpp"

namespace gsemod {

enum class RunMode : std::uint8_t { kLastStage, kFullRun };

inline std::string_view to_string(RunMode mode) {
  return mode == RunMode::kLastStage ? "last-stage" : "full-run";
}

inline std::optional<RunMode> run_mode_from_string(std::string_view s) {
  if (s == "last-stage") return RunMode::kLastStage;
  if (s == "full-run") return RunMode::kFullRun;
  return std::nullopt;
}

inline constexpr std::uint64_t kDefaultLastStageIters = 10'000'000;
inline constexpr std::uint64_t kDefaultFullRunIters = 100'000'000;

struct RunOptions {
  std::uint64_t max_iters = kDefaultLastStageIters;
  TraceLevel trace = TraceLevel::kSilent;
  std::function<void(const TraceRecord&)> sink;  // receives records unless trace is silent
  bool check_structure = false;                  // structural checks on every new almost balanced population
};

// Violation counters for the properties every run must satisfy once the
// front is covered. All zero in a correct implementation.
struct RunInvariants {
  std::uint64_t diversity_decreases = 0;
  std::uint64_t balance_violations = 0;     // not almost balanced between the last stage's start and the optimum
  std::uint64_t final_move_violations = 0;  // optimum not reached by replacing an I10 individual with its x̃
  std::uint64_t structure_violations = 0;
  std::vector<std::string> messages;        // first few, for diagnostics

  std::uint64_t total() const noexcept {
    return diversity_decreases + balance_violations + final_move_violations + structure_violations;
  }
};

struct RunResult {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::kLastStage;
  std::uint64_t iterations = 0;
  std::optional<std::uint64_t> iterations_to_cover;
  std::optional<std::uint64_t> iterations_to_optimal;
  std::optional<std::uint64_t> last_stage_start;  // first iteration whose population was almost balanced
  bool truncated = false;
  std::vector<Phase> phases;
  std::array<std::uint64_t, 4> acceptance_counts{};  // indexed by AcceptanceKind
  std::array<std::uint64_t, 3> state_iterations{};   // iterations spent in State 1..3
  RunInvariants invariants;
  double wall_time = 0.0;  // seconds; never written to result files

  std::uint64_t accepted(AcceptanceKind kind) const { return acceptance_counts[static_cast<std::size_t>(kind)]; }
  std::uint64_t state_total() const { return state_iterations[0] + state_iterations[1] + state_iterations[2]; }
};

// Uniform random string: one next() draw per 64 positions, low bit first.
inline BitString random_bit_string(std::size_t n, RandomSource& rng) {
  BitString x(n);
  for (std::size_t base = 0; base < n; base += 64) {
    const std::uint64_t word = rng.next();
    for (std::size_t k = base; k < std::min(n, base + 64); ++k) {
      if ((word >> (k - base)) & 1U) x.set(k);
    }
  }
  return x;
}

// One seeded GSEMO_D trial on OneMinMax, advanced one iteration at a time.
// Each iteration draws one parent index, then n mutation coin flips in
// ascending position order.
class Trial {
 public:
  Trial(OneMinMaxArchive archive, RandomSource rng, RunMode mode, RunOptions options)
      : archive_(std::move(archive)), rng_(std::move(rng)), options_(std::move(options)), started_(Clock::now()) {
    result_.n = archive_.n();
    result_.seed = rng_.seed();
    result_.mode = mode;
    track_ = archive_.n() % 2 == 1;
    if (is_front_covered(archive_)) {
      result_.iterations_to_cover = 0;
      start_tracking();
    }
    if (is_optimal(archive_)) result_.iterations_to_optimal = 0;
  }

  const OneMinMaxArchive& archive() const noexcept { return archive_; }
  const ClassificationTracker& tracker() const noexcept { return tracker_; }
  std::uint64_t iterations() const noexcept { return result_.iterations; }
  bool optimal() const noexcept { return result_.iterations_to_optimal.has_value(); }
  bool done() const noexcept { return optimal() || result_.iterations >= options_.max_iters; }

  void step() {
    if (optimal()) throw std::logic_error("trial already reached the optimum");
    const std::uint64_t t = ++result_.iterations;
    const BitString& parent = archive_.select_parent(rng_);
    BitString y = parent;
    mutate_in_place(y, rng_);

    TraceRecord rec;
    rec.iter = t;
    const bool in_last_stage = tracker_.almost_balanced();
    bool tilde_move = false;
    std::optional<IndexClass> target_class;
    if (in_last_stage) {
      const auto& cl = tracker_.classification();
      const std::size_t hot = *tracker_.balance().hot;
      const std::size_t cold = *tracker_.balance().cold;
      rec.state = tracker_.state();
      rec.sizes = {cl.size(IndexClass::k10), cl.size(JSet::kJhot), cl.size(JSet::kJ00), cl.size(JSet::kJ10)};
      rec.hot = hot;
      rec.cold = cold;
      const std::size_t i = y.count();
      target_class = cl.index_class[i];
      const BitString& incumbent = archive_.at(i);
      tilde_move = hamming(y, incumbent) == 2 && y.test(hot) != incumbent.test(hot) && y.test(cold) != incumbent.test(cold);
      ++result_.state_iterations[static_cast<std::size_t>(*rec.state) - 1];
    }
    const Diversity before = archive_.diversity();
    const bool covered_before = is_front_covered(archive_);

    const AcceptanceOutcome out = archive_.offer(y);
    ++result_.acceptance_counts[static_cast<std::size_t>(out.kind)];
    rec.accepted = out.accepted();
    rec.changed = out.changed;
    rec.replaced_index = out.replaced_index;
    if (out.replaced_index && in_last_stage) rec.replaced_class = target_class;
    rec.diversity = archive_.diversity();

    if (covered_before && archive_.diversity() < before) {
      ++result_.invariants.diversity_decreases;
      note("diversity decreased at iteration " + std::to_string(t));
    }
    if (!result_.iterations_to_cover && is_front_covered(archive_)) {
      result_.iterations_to_cover = t;
      start_tracking();
    } else if (out.changed && track_ && covered_before) {
      if (out.replaced_index) {
        tracker_.update(archive_.slots(), archive_.counts(), *out.replaced_index);
      } else {
        tracker_.reset(archive_.slots(), archive_.counts());
      }
      after_change(t);
    }
    rec.optimal = is_optimal(archive_);
    if (rec.optimal) {
      result_.iterations_to_optimal = t;
      if (in_last_stage && !(tilde_move && target_class == IndexClass::k10 && out.changed)) {
        ++result_.invariants.final_move_violations;
        note("optimum reached without an x̃ move at iteration " + std::to_string(t));
      }
    }

    if (options_.trace == TraceLevel::kFull) rec.offspring = y.to_string();
    if (options_.trace != TraceLevel::kSilent && options_.sink) options_.sink(rec);
    // Phases are undefined once the walk leaves the almost balanced region.
    if (track_ && result_.invariants.balance_violations > 0) track_ = false;
    if (track_) segmenter_.push(rec);
  }

  RunResult finish() {
    result_.truncated = !optimal();
    if (track_) result_.phases = segmenter_.finish();
    result_.wall_time = std::chrono::duration<double>(Clock::now() - started_).count();
    return std::move(result_);
  }

  RunResult run() {
    while (!done()) step();
    return finish();
  }

 private:
  using Clock = std::chrono::steady_clock;

  void start_tracking() {
    if (!track_) return;
    tracker_.reset(archive_.slots(), archive_.counts());
    after_change(result_.iterations);
  }

  // Called whenever the covered population changed (or was first covered).
  void after_change(std::uint64_t t) {
    if (tracker_.almost_balanced()) {
      if (!result_.last_stage_start) result_.last_stage_start = t + 1;
      if (options_.check_structure) {
        const auto problems = structural_violations(archive_.slots(), tracker_.balance(), tracker_.classification());
        result_.invariants.structure_violations += problems.size();
        for (const auto& p : problems) note(p);
      }
    } else if (result_.last_stage_start && !is_optimal(archive_)) {
      ++result_.invariants.balance_violations;
      note("population left the almost balanced set at iteration " + std::to_string(t));
    }
  }

  void note(std::string message) {
    if (result_.invariants.messages.size() < 8) result_.invariants.messages.push_back(std::move(message));
  }

  OneMinMaxArchive archive_;
  RandomSource rng_;
  RunOptions options_;
  RunResult result_;
  ClassificationTracker tracker_;
  PhaseSegmenter segmenter_;
  bool track_ = false;
  Clock::time_point started_;
};

// Almost balanced start: the optimal construction with one random
// two-bit shift, drawn from the trial's own stream.
inline Trial last_stage_trial(std::size_t n, std::uint64_t seed, RunOptions options) {
  require_odd(n);
  RandomSource rng(seed);
  auto start = build_almost_balanced_population(n, rng);
  return Trial(std::move(start), std::move(rng), RunMode::kLastStage, std::move(options));
}

inline Trial full_run_trial(std::size_t n, std::uint64_t seed, RunOptions options) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  RandomSource rng(seed);
  auto start = new_archive(random_bit_string(n, rng));
  return Trial(std::move(start), std::move(rng), RunMode::kFullRun, std::move(options));
}

inline RunResult run_last_stage(std::size_t n, std::uint64_t seed, RunOptions options = {}) {
  return last_stage_trial(n, seed, std::move(options)).run();
}

inline RunResult run_full(std::size_t n, std::uint64_t seed, RunOptions options = {}) {
  return full_run_trial(n, seed, std::move(options)).run();
}

}  // namespace gsemod
