#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gsemod/classifier.hpp"
#include "gsemod/trace.hpp"

namespace gsemod {

enum class PhaseEnd : std::uint8_t {
  kOptimalFromState1,
  kState2JhotGrew,
  kState2I10Replaced,
  kState3Changed,
  kTruncated,
};

inline std::string_view to_string(PhaseEnd e) {
  switch (e) {
    case PhaseEnd::kOptimalFromState1: return "optimal-from-state1";
    case PhaseEnd::kState2JhotGrew: return "state2-jhot-grew";
    case PhaseEnd::kState2I10Replaced: return "state2-i10-replaced";
    case PhaseEnd::kState3Changed: return "state3-changed";
    case PhaseEnd::kTruncated: return "truncated";
  }
  return "?";
}

struct Phase {
  std::uint64_t start_iter = 0;
  std::uint64_t end_iter = 0;  // inclusive
  PhaseEnd end_reason = PhaseEnd::kTruncated;
  bool ended_optimal = false;
  std::array<std::uint64_t, 3> state_iterations{};  // iterations spent in State 1..3

  std::uint64_t length() const noexcept { return end_iter - start_iter + 1; }
  friend bool operator==(const Phase&, const Phase&) = default;
};

// Splits a stream of consecutive iteration records into phases.
//
// Iteration t closes the current phase when
//   (1) P_t is in State 1 and P_{t+1} is optimal;
//   (2) P_t is in State 2, P_{t+1} is not in State 3, and either |Jhot| grew
//       or an I10-indexed individual was replaced by a different string;
//   (3) P_t is in State 3 and P_{t+1} differs from P_t.
// Deciding iteration t needs record t+1, so one record is held back.
// Records without a state before the first stateful one are skipped (the
// part of a full run before the population is almost balanced).
class PhaseSegmenter {
 public:
  void push(const TraceRecord& r) {
    if (!r.state) {
      if (!pending_ && phases_.empty()) return;
      throw MalformedTrace("record " + std::to_string(r.iter) + " has no state inside the last stage");
    }
    if (pending_) {
      if (r.iter != pending_->iter + 1) throw MalformedTrace("trace records are not consecutive");
      if (pending_->optimal) throw MalformedTrace("records continue after the optimum");
      close_if_boundary(*pending_, &r);
    }
    if (!open_) {
      current_ = Phase{};
      current_.start_iter = r.iter;
      open_ = true;
    }
    current_.end_iter = r.iter;
    ++current_.state_iterations[static_cast<std::size_t>(*r.state) - 1];
    pending_ = r;
  }

  std::vector<Phase> finish() {
    if (pending_) {
      close_if_boundary(*pending_, nullptr);
      pending_.reset();
    }
    if (open_) {
      current_.end_reason = PhaseEnd::kTruncated;
      current_.ended_optimal = false;
      phases_.push_back(current_);
      open_ = false;
    }
    return std::move(phases_);
  }

 private:
  static std::optional<PhaseEnd> boundary(const TraceRecord& cur, const TraceRecord* next) {
    switch (*cur.state) {
      case State::kState1:
        if (cur.optimal) return PhaseEnd::kOptimalFromState1;
        return std::nullopt;
      case State::kState2: {
        if (next && next->state == State::kState3) return std::nullopt;
        if (cur.changed && cur.replaced_class == IndexClass::k10) return PhaseEnd::kState2I10Replaced;
        if (next && next->sizes.jhot > cur.sizes.jhot) return PhaseEnd::kState2JhotGrew;
        return std::nullopt;
      }
      case State::kState3:
        if (cur.changed) return PhaseEnd::kState3Changed;
        return std::nullopt;
    }
    return std::nullopt;
  }

  void close_if_boundary(const TraceRecord& cur, const TraceRecord* next) {
    if (auto end = boundary(cur, next)) {
      current_.end_reason = *end;
      current_.ended_optimal = cur.optimal;
      phases_.push_back(current_);
      open_ = false;
    }
  }

  std::vector<Phase> phases_;
  Phase current_;
  bool open_ = false;
  std::optional<TraceRecord> pending_;
};

inline std::vector<Phase> segment_phases(std::span<const TraceRecord> trace) {
  PhaseSegmenter segmenter;
  for (const auto& r : trace) segmenter.push(r);
  return segmenter.finish();
}

}  // namespace gsemod
