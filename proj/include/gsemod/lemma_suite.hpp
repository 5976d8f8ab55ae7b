#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsemod/oracle.hpp"
#include "gsemod/populations.hpp"
#include "gsemod/runner.hpp"
#include "gsemod/structure.hpp"

namespace gsemod {

inline constexpr double kDefaultSlack = 16.0;

// Valid and improving replacement sets for index i as the lemmas describe
// them, built directly from x_i, hot and cold without any diversity
// evaluation.
struct PredictedSets {
  std::vector<BitString> valid;
  std::vector<BitString> improving;
};

inline PredictedSets predicted_replacements(std::span<const BitString> levels, const PositionBalance& pb,
                                            std::size_t i) {
  const std::size_t hot = *pb.hot;
  const std::size_t cold = *pb.cold;
  const BitString& x = levels[i];
  const std::size_t n = x.size();
  PredictedSets out;
  switch (detail::class_of(x, hot, cold)) {
    case IndexClass::k01:
      break;
    case IndexClass::k11:
      for (std::size_t k = 0; k < n; ++k) {
        if (x.test(k)) continue;
        BitString y = x;
        y.flip(hot);
        y.flip(k);
        out.valid.push_back(y);
      }
      break;
    case IndexClass::k00:
      for (std::size_t k = 0; k < n; ++k) {
        if (!x.test(k)) continue;
        BitString y = x;
        y.flip(cold);
        y.flip(k);
        out.valid.push_back(y);
      }
      break;
    case IndexClass::k10: {
      BitString tilde = x;
      tilde.flip(hot);
      tilde.flip(cold);
      for (std::size_t a = 0; a < n; ++a) {
        if (!tilde.test(a)) continue;
        for (std::size_t b = 0; b < n; ++b) {
          if (tilde.test(b)) continue;
          BitString y = tilde;
          y.flip(a);
          y.flip(b);
          if (!(y == x)) out.valid.push_back(y);
        }
      }
      out.valid.push_back(tilde);
      out.improving.push_back(tilde);
      break;
    }
  }
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.improving.begin(), out.improving.end());
  return out;
}

struct BoundTally {
  std::uint64_t pass = 0;
  std::uint64_t fail = 0;
};

struct AdvisoryViolation {
  std::string population;
  oracle::BoundCheck check;
};

struct LemmaReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t synthetic = 0;
  std::size_t harvested = 0;
  std::uint64_t indices_checked = 0;
  std::array<std::uint64_t, 4> class_indices{};  // by IndexClass
  std::uint64_t characterization_mismatches = 0;
  std::uint64_t structure_violations = 0;
  std::uint64_t i01_nonzero = 0;
  std::vector<std::string> hard_failures;  // first few, with the population
  std::map<std::pair<oracle::TableRow, oracle::BoundKind>, BoundTally> table1;
  std::vector<AdvisoryViolation> advisory;  // first few
  std::uint64_t advisory_count = 0;

  std::size_t samples() const noexcept { return synthetic + harvested; }
  std::uint64_t hard_failure_count() const noexcept {
    return characterization_mismatches + structure_violations + i01_nonzero;
  }
};

inline constexpr std::size_t kReportedFailures = 20;

inline std::string population_line(std::span<const BitString> levels) {
  std::string out;
  for (const auto& x : levels) {
    if (!out.empty()) out += ' ';
    out += x.to_string();
  }
  return out;
}

// All checks on one almost balanced population.
inline void check_population(std::span<const BitString> levels, double slack, LemmaReport& report) {
  const std::size_t n = levels.size() - 1;
  const PositionBalance pb = classify_positions(column_counts(levels));
  if (!pb.almost_balanced()) throw std::logic_error("sampled population is not almost balanced");
  const Classification cl = classify(levels, pb);
  const std::string line = population_line(levels);
  auto hard = [&](std::string what) {
    if (report.hard_failures.size() < kReportedFailures) report.hard_failures.push_back(what + " [" + line + "]");
  };

  for (const auto& problem : structural_violations(levels, pb, cl)) {
    ++report.structure_violations;
    hard(problem);
  }

  std::vector<oracle::ReplacementReport> reports;
  reports.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    reports.push_back(oracle::replacement_report(levels, i));
    const auto& r = reports.back();
    const auto predicted = predicted_replacements(levels, pb, i);
    ++report.indices_checked;
    ++report.class_indices[static_cast<std::size_t>(cl.index_class[i])];
    if (r.valid_set != predicted.valid || r.improving_set != predicted.improving) {
      ++report.characterization_mismatches;
      hard("index " + std::to_string(i) + " (" + std::string(to_string(cl.index_class[i])) +
           "): valid set differs from the predicted shape");
    }
    if (cl.index_class[i] == IndexClass::k01 && r.replace_prob != 0) {
      ++report.i01_nonzero;
      hard("index " + std::to_string(i) + " in I01 has nonzero replacement probability");
    }
  }

  for (const auto& check : oracle::check_table1_bounds(levels, cl, reports, slack)) {
    auto& tally = report.table1[{check.row, check.kind}];
    if (check.pass) {
      ++tally.pass;
    } else {
      ++tally.fail;
      ++report.advisory_count;
      if (report.advisory.size() < kReportedFailures) report.advisory.push_back({line, check});
    }
  }
}

// A population harvested from a short last-stage run: a uniform number of
// iterations in [0, 2n^2), retried from a fresh stream whenever the run hits
// the optimum first.
inline std::vector<BitString> harvest_population(std::size_t n, std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t stream = derive_seed(seed, n, attempt);
    RandomSource pick(mix64(stream));
    const std::uint64_t steps = pick.below(2 * n * n);
    RunOptions options;
    options.max_iters = steps;
    Trial trial = last_stage_trial(n, stream, options);
    while (!trial.done()) trial.step();
    if (!trial.optimal()) {
      const auto slots = trial.archive().slots();
      return {slots.begin(), slots.end()};
    }
  }
}

// Even samples are perturbed random optimal constructions, odd samples are
// harvested from short runs. Sample s uses stream derive_seed(seed, n, s).
inline LemmaReport lemma_suite(std::size_t n, std::size_t samples, std::uint64_t seed, double slack = kDefaultSlack) {
  require_odd(n);
  if (n < 5 || n > oracle::kEnumerationLimit) {
    throw std::domain_error("lemma_suite needs 5 <= n <= " + std::to_string(oracle::kEnumerationLimit));
  }
  LemmaReport report;
  report.n = n;
  report.seed = seed;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::uint64_t stream = derive_seed(seed, n, s);
    std::vector<BitString> levels;
    if (s % 2 == 0) {
      RandomSource rng(stream);
      levels = random_optimal_levels(n, rng);
      perturb_to_almost_balanced(levels, rng);
      ++report.synthetic;
    } else {
      levels = harvest_population(n, stream);
      ++report.harvested;
    }
    check_population(levels, slack, report);
  }
  return report;
}

inline nlohmann::json to_json(const LemmaReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["samples"] = r.samples();
  j["synthetic"] = r.synthetic;
  j["harvested"] = r.harvested;
  j["indices_checked"] = r.indices_checked;
  for (std::size_t c = 0; c < 4; ++c) {
    j["class_indices"][std::string(to_string(static_cast<IndexClass>(c)))] = r.class_indices[c];
  }
  j["hard"] = {{"characterization_mismatches", r.characterization_mismatches},
               {"structure_violations", r.structure_violations},
               {"i01_nonzero", r.i01_nonzero},
               {"failures", r.hard_failures}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, tally] : r.table1) {
    rows.push_back({{"row", to_string(key.first)},
                    {"bound", to_string(key.second)},
                    {"pass", tally.pass},
                    {"fail", tally.fail}});
  }
  j["table1"] = rows;
  nlohmann::json adv = nlohmann::json::array();
  for (const auto& v : r.advisory) {
    adv.push_back({{"population", v.population},
                   {"index", v.check.index},
                   {"row", to_string(v.check.row)},
                   {"bound", to_string(v.check.kind)},
                   {"value", v.check.value},
                   {"limit", v.check.limit}});
  }
  j["advisory_violations"] = r.advisory_count;
  j["advisory"] = adv;
  return j;
}

// Simulated one-step frequencies for a fixed population, compared with the
// exact oracle values.
struct FrequencyCheck {
  std::string label;
  double exact = 0;
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  double z = 0;  // |hits - N p| / sqrt(N p (1 - p)); 0 when p is 0 and hits is 0

  bool within(double sigmas) const noexcept { return z <= sigmas; }
};

inline double binomial_z(std::uint64_t hits, std::uint64_t trials, double p) {
  const double mean = static_cast<double>(trials) * p;
  const double var = mean * (1.0 - p);
  const double diff = std::abs(static_cast<double>(hits) - mean);
  if (var == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / std::sqrt(var);
}

// One entry per index i (replacement of x_i by a different string) plus a
// final "optimal" entry (the iteration reaches maximal diversity).
inline std::vector<FrequencyCheck> monte_carlo_check(std::span<const BitString> levels, std::uint64_t iterations,
                                                     std::uint64_t seed) {
  const std::size_t n = levels.size() - 1;
  const OneMinMaxArchive archive = archive_from_population(levels);
  const Diversity best = max_diversity(static_cast<std::int64_t>(n), static_cast<std::int64_t>(n + 1));
  std::vector<std::uint64_t> replaced(n + 1, 0);
  std::uint64_t optimal = 0;
  RandomSource rng(seed);
  for (std::uint64_t t = 0; t < iterations; ++t) {
    BitString y = archive.select_parent(rng);
    mutate_in_place(y, rng);
    const AcceptanceOutcome out = archive.preview(y);
    if (out.changed && out.replaced_index) ++replaced[*out.replaced_index];
    if (out.changed && out.diversity_after == best) ++optimal;
  }
  std::vector<FrequencyCheck> checks;
  for (std::size_t i = 0; i <= n; ++i) {
    const double p = static_cast<double>(oracle::exact_replace_prob(levels, i));
    checks.push_back({"replace[" + std::to_string(i) + "]", p, replaced[i], iterations,
                      binomial_z(replaced[i], iterations, p)});
  }
  const double p = static_cast<double>(oracle::exact_optimal_prob(levels));
  checks.push_back({"optimal", p, optimal, iterations, binomial_z(optimal, iterations, p)});
  return checks;
}

}  // namespace gsemod
