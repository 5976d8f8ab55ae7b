#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace gsemod {

// SplitMix64 finalizer. Used only to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed of the stream owned by trial `trial` of group `group` (e.g. the problem
// size) under `master`. Distinct (group, trial) pairs give unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t group, std::uint64_t trial) noexcept {
  return mix64(mix64(mix64(master) ^ group) ^ (trial * 0xd1b54a32d192ed03ULL));
}

// Seeded random source with a platform-independent draw sequence.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Bounded integers use Lemire's multiply-and-reject method on whole
// 64-bit draws, so they are exactly uniform and consume a deterministic
// number of engine outputs for a given stream. std::uniform_int_distribution
// is not used because its algorithm is implementation-defined.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("RandomSource::below: bound must be positive");
    unsigned __int128 product = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  std::size_t index(std::size_t size) { return static_cast<std::size_t>(below(size)); }

  // True with probability exactly 1/denominator.
  bool one_in(std::uint64_t denominator) { return below(denominator) == 0; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace gsemod
