#include <gtest/gtest.h>

#include <cmath>

#include "gsemod/archive.hpp"
#include "gsemod/mutation.hpp"

using namespace gsemod;

namespace {

BitString bs(const char* s) { return BitString::from_string(s); }

std::vector<BitString> pop(std::initializer_list<const char*> items) {
  std::vector<BitString> out;
  for (const char* s : items) out.push_back(BitString::from_string(s));
  return out;
}

// (ones, leading ones): a toy bi-objective function with real dominance.
struct OnesLeadingOnes {
  struct Fitness {
    int ones = 0;
    int leading = 0;
    std::array<int, 2> components() const noexcept { return {ones, leading}; }
  };
  std::size_t n = 0;
  Fitness evaluate(const BitString& x) const {
    int lead = 0;
    while (lead < static_cast<int>(n) && x.test(static_cast<std::size_t>(lead))) ++lead;
    return {static_cast<int>(x.count()), lead};
  }
  std::size_t key(const Fitness& f) const noexcept {
    return static_cast<std::size_t>(f.ones) * (n + 1) + static_cast<std::size_t>(f.leading);
  }
  std::size_t key_count() const noexcept { return (n + 1) * (n + 1); }
};

}  // namespace

TEST(Archive, FreshArchive) {
  const auto a = new_archive(bs("010"));
  EXPECT_EQ(a.size(), 1u);
  EXPECT_TRUE(a.contains(1));
  EXPECT_EQ(a.at(1), bs("010"));
  EXPECT_EQ(a.diversity(), 0);
  EXPECT_TRUE(new_archive(bs("000")).contains(0));
  EXPECT_FALSE(is_front_covered(a));
  EXPECT_FALSE(is_optimal(a));
  EXPECT_THROW(a.at(2), std::out_of_range);
}

TEST(Archive, FromPopulationRejectsDuplicateFitness) {
  EXPECT_THROW(archive_from_population(pop({"001", "010"})), std::invalid_argument);
}

TEST(Archive, OfferReplacesWhenDiversityGrows) {
  auto a = archive_from_population(pop({"000", "001", "011", "111"}));
  EXPECT_EQ(a.diversity(), 10);
  const auto out = a.offer(bs("100"));
  EXPECT_EQ(out.kind, AcceptanceKind::kReplacedSameFitness);
  EXPECT_EQ(out.replaced_index, 1u);
  EXPECT_TRUE(out.changed);
  EXPECT_EQ(out.diversity_after, 12);
  EXPECT_EQ(a.diversity(), 12);
  EXPECT_EQ(a.diversity(), pairwise_total_hamming(a.individuals()));
  EXPECT_TRUE(is_optimal(a));
}

TEST(Archive, OfferAcceptsTies) {
  auto a = archive_from_population(pop({"000", "001", "011", "111"}));
  const auto out = a.offer(bs("010"));
  EXPECT_EQ(out.kind, AcceptanceKind::kReplacedSameFitness);
  EXPECT_TRUE(out.changed);
  EXPECT_EQ(a.diversity(), 10);
  EXPECT_EQ(a.at(1), bs("010"));
}

TEST(Archive, OfferOfIncumbentIsAcceptedNoOp) {
  auto a = archive_from_population(pop({"000", "001", "011", "111"}));
  const auto before = a.snapshot();
  const auto out = a.offer(bs("011"));
  EXPECT_TRUE(out.accepted());
  EXPECT_FALSE(out.changed);
  EXPECT_EQ(a.snapshot(), before);
  EXPECT_EQ(a.diversity(), 10);
}

TEST(Archive, OfferRejectsDiversityLoss) {
  auto a = archive_from_population(pop({"000", "100", "011", "111"}));
  const auto out = a.offer(bs("001"));
  EXPECT_EQ(out.kind, AcceptanceKind::kRejectedDiversity);
  EXPECT_FALSE(out.accepted());
  EXPECT_EQ(a.at(1), bs("100"));
  EXPECT_EQ(a.diversity(), 12);
}

TEST(Archive, InsertsNewFitnessValues) {
  auto a = new_archive(bs("010"));
  const auto out = a.offer(bs("111"));
  EXPECT_EQ(out.kind, AcceptanceKind::kInsertedNewFitness);
  EXPECT_EQ(out.removed, 0u);
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a.diversity(), 2);
  EXPECT_EQ((std::vector<std::size_t>(a.keys().begin(), a.keys().end())), (std::vector<std::size_t>{1, 3}));
}

TEST(Archive, PreviewDoesNotMutate) {
  const auto a = archive_from_population(pop({"000", "001", "011", "111"}));
  const auto out = a.preview(bs("100"));
  EXPECT_EQ(out.diversity_after, 12);
  EXPECT_EQ(a.diversity(), 10);
  EXPECT_EQ(a.at(1), bs("001"));
}

TEST(Archive, CoverageAndOptimality) {
  EXPECT_TRUE(is_optimal(archive_from_population(pop({"000", "001", "110", "111"}))));
  EXPECT_FALSE(is_optimal(archive_from_population(pop({"000", "001", "011", "111"}))));
  EXPECT_TRUE(is_front_covered(archive_from_population(pop({"000", "001", "011", "111"}))));
  EXPECT_FALSE(is_front_covered(archive_from_population(pop({"000", "001", "011"}))));
}

TEST(Archive, SnapshotRoundTrip) {
  const auto a = archive_from_population(pop({"111", "000", "011", "001"}));
  EXPECT_EQ(a.snapshot(), "000\n001\n011\n111\n");
  const auto b = archive_from_population(parse_population(a.snapshot()));
  EXPECT_EQ(b.snapshot(), a.snapshot());
  EXPECT_EQ(parse_population("\n01\r\n\n10\n").size(), 2u);
}

TEST(Archive, SelectParentIsUniform) {
  const auto a = archive_from_population(pop({"000", "001", "011", "111"}));
  RandomSource rng(11);
  std::array<std::uint64_t, 4> hits{};
  const std::uint64_t draws = 100'000;
  for (std::uint64_t t = 0; t < draws; ++t) ++hits[a.select_parent(rng).count()];
  const double p = 0.25;
  for (auto h : hits) EXPECT_LE(std::abs(h - draws * p), 4 * std::sqrt(draws * p * (1 - p)));
  const auto single = new_archive(bs("0110"));
  EXPECT_EQ(single.select_parent(rng), bs("0110"));
}

TEST(Archive, CoveredFrontStaysCoveredAndDiversityNeverDrops) {
  RandomSource rng(5);
  const std::size_t n = 9;
  BitString x(n);
  auto a = new_archive(x);
  Diversity last = -1;
  for (int t = 0; t < 20000; ++t) {
    const bool covered = is_front_covered(a);
    a.offer(standard_bit_mutation(a.select_parent(rng), rng));
    if (covered) {
      EXPECT_TRUE(is_front_covered(a));
      EXPECT_GE(a.diversity(), last);
    }
    last = a.diversity();
    ASSERT_EQ(a.diversity(), pairwise_total_hamming(a.individuals()));
    ASSERT_EQ(total_hamming(a.counts()), a.diversity());
  }
}

TEST(ArchiveDominance, RejectsDominatedOffers) {
  const std::size_t n = 4;
  Archive<OnesLeadingOnes> a(OnesLeadingOnes{n}, bs("1100"));  // (2, 2)
  const auto out = a.offer(bs("0100"));                        // (1, 0)
  EXPECT_EQ(out.kind, AcceptanceKind::kRejectedDominated);
  EXPECT_EQ(a.size(), 1u);
}

TEST(ArchiveDominance, InsertionRemovesDominated) {
  const std::size_t n = 4;
  const std::vector<BitString> start = pop({"1000", "0111"});  // (1, 1), (3, 0)
  Archive<OnesLeadingOnes> a(OnesLeadingOnes{n}, start);
  EXPECT_EQ(a.size(), 2u);
  const auto out = a.offer(bs("1110"));  // (3, 3) dominates both
  EXPECT_EQ(out.kind, AcceptanceKind::kInsertedNewFitness);
  EXPECT_EQ(out.removed, 2u);
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(a.diversity(), 0);
  EXPECT_EQ(out.diversity_after, 0);
}

TEST(ArchiveDominance, IncomparableInsertKeepsBoth) {
  const std::size_t n = 4;
  Archive<OnesLeadingOnes> a(OnesLeadingOnes{n}, bs("1100"));  // (2, 2)
  const auto out = a.offer(bs("0111"));                        // (3, 0)
  EXPECT_EQ(out.kind, AcceptanceKind::kInsertedNewFitness);
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a.diversity(), 3);
}

TEST(ArchiveDominance, ConstructorRejectsDominatedPopulation) {
  const std::vector<BitString> bad = pop({"1100", "0100"});
  EXPECT_THROW((Archive<OnesLeadingOnes>(OnesLeadingOnes{4}, bad)), std::invalid_argument);
}

TEST(ArchiveDominance, RandomWalkKeepsMutualNonDominance) {
  const std::size_t n = 8;
  Archive<OnesLeadingOnes> a(OnesLeadingOnes{n}, BitString(n));
  RandomSource rng(21);
  const OnesLeadingOnes problem{n};
  for (int t = 0; t < 5000; ++t) {
    a.offer(standard_bit_mutation(a.select_parent(rng), rng));
    const auto members = a.individuals();
    for (const auto& x : members) {
      for (const auto& y : members) EXPECT_FALSE(dominates(problem.evaluate(x), problem.evaluate(y)));
    }
    ASSERT_EQ(a.diversity(), pairwise_total_hamming(members));
  }
}
