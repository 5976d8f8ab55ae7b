#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gsemod/experiment.hpp"
#include "gsemod/lemma_suite.hpp"
#include "gsemod/populations.hpp"
#include "gsemod/runner.hpp"

using namespace gsemod;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gsemod_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Populations, OptimalConstruction) {
  const auto a = build_optimal_population(3);
  EXPECT_EQ(a.snapshot(), "000\n100\n011\n111\n");
  EXPECT_EQ(a.diversity(), 12);
  EXPECT_EQ(build_optimal_population(5).diversity(), 45);
  for (std::size_t n : {1u, 7u, 31u, 127u}) {
    const auto p = build_optimal_population(n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(p.counts()[k], static_cast<std::int64_t>((n + 1) / 2));
    EXPECT_TRUE(is_optimal(p));
  }
  EXPECT_THROW(build_optimal_population(4), std::domain_error);
}

TEST(Populations, RandomOptimalLevelsAreOptimal) {
  RandomSource rng(3);
  for (std::size_t n : {3u, 9u, 33u}) EXPECT_TRUE(is_optimal(archive_from_population(random_optimal_levels(n, rng))));
}

TEST(Populations, ForcedShiftGivesSmallExample) {
  auto levels = optimal_levels(3);
  shift_bit(levels, 1, 0, 2);
  const auto a = archive_from_population(levels);
  EXPECT_EQ(a.snapshot(), "000\n001\n011\n111\n");
  EXPECT_EQ(a.diversity(), 10);
  EXPECT_THROW(shift_bit(levels, 1, 0, 2), std::invalid_argument);
}

TEST(Populations, AlmostBalancedHasSecondBestDiversity) {
  for (std::size_t n : {3u, 5u, 15u, 63u}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      RandomSource rng(derive_seed(1, n, s));
      const auto a = build_almost_balanced_population(n, rng);
      const auto nn = static_cast<std::int64_t>(n);
      EXPECT_EQ(a.diversity(), max_diversity(nn, nn + 1) - 2);
      const auto pb = classify_positions(a.counts());
      EXPECT_TRUE(pb.almost_balanced());
      EXPECT_EQ(pb.count(Balance::kAlmostBalanced), 2u);
    }
  }
  RandomSource rng(1);
  EXPECT_THROW(build_almost_balanced_population(6, rng), std::domain_error);
}

TEST(Runner, RandomBitStringUsesOneDrawPerWord) {
  RandomSource a(8), b(8);
  const BitString x = random_bit_string(70, a);
  const std::uint64_t w0 = b.next();
  const std::uint64_t w1 = b.next();
  for (std::size_t k = 0; k < 64; ++k) EXPECT_EQ(x.test(k), ((w0 >> k) & 1U) == 1U);
  for (std::size_t k = 64; k < 70; ++k) EXPECT_EQ(x.test(k), ((w1 >> (k - 64)) & 1U) == 1U);
  EXPECT_EQ(a.next(), b.next());
}

TEST(Runner, LastStageIsDeterministic) {
  RunOptions o;
  const auto a = run_last_stage(31, 7, o);
  const auto b = run_last_stage(31, 7, o);
  EXPECT_EQ(a.iterations_to_optimal, b.iterations_to_optimal);
  EXPECT_EQ(a.acceptance_counts, b.acceptance_counts);
  EXPECT_EQ(a.phases, b.phases);
  EXPECT_NE(run_last_stage(31, 8, o).iterations_to_optimal, a.iterations_to_optimal);
}

TEST(Runner, LastStageInvariantsHold) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RunOptions o;
    o.check_structure = true;
    const auto r = run_last_stage(15, seed, o);
    ASSERT_FALSE(r.truncated);
    EXPECT_EQ(r.iterations_to_cover, 0u);
    EXPECT_EQ(r.last_stage_start, 1u);
    EXPECT_EQ(r.invariants.total(), 0u) << (r.invariants.messages.empty() ? "" : r.invariants.messages[0]);
    EXPECT_EQ(r.state_total(), r.iterations);
    std::uint64_t counted = 0;
    for (auto c : r.acceptance_counts) counted += c;
    EXPECT_EQ(counted, r.iterations);
    EXPECT_EQ(r.accepted(AcceptanceKind::kInsertedNewFitness), 0u);
    EXPECT_EQ(r.accepted(AcceptanceKind::kRejectedDominated), 0u);
  }
}

TEST(Runner, EveryRecordBeforeTheOptimumIsAlmostBalanced) {
  std::vector<TraceRecord> trace;
  RunOptions o;
  o.trace = TraceLevel::kFull;
  o.sink = [&](const TraceRecord& r) { trace.push_back(r); };
  const auto r = run_last_stage(21, 3, o);
  ASSERT_EQ(trace.size(), r.iterations);
  Diversity last = 0;
  const Diversity best = max_diversity(21, 22);
  for (const auto& rec : trace) {
    EXPECT_TRUE(rec.state.has_value());
    EXPECT_TRUE(rec.hot && rec.cold);
    EXPECT_TRUE(rec.offspring.has_value());
    EXPECT_GE(rec.diversity, last);
    EXPECT_TRUE(rec.diversity == best - 2 || rec.optimal);
    last = rec.diversity;
  }
  EXPECT_TRUE(trace.back().optimal);
  EXPECT_EQ(trace.back().replaced_class, IndexClass::k10);
}

TEST(Runner, TruncationIsReported) {
  RunOptions o;
  o.max_iters = 3;
  const auto r = run_last_stage(63, 1, o);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.iterations, 3u);
  EXPECT_FALSE(r.iterations_to_optimal.has_value());
  ASSERT_FALSE(r.phases.empty());
  EXPECT_EQ(r.phases.back().end_reason, PhaseEnd::kTruncated);
}

TEST(Runner, FullRunCoversBeforeOptimum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunOptions o;
    o.max_iters = kDefaultFullRunIters;
    const auto r = run_full(15, seed, o);
    ASSERT_TRUE(r.iterations_to_cover && r.iterations_to_optimal);
    EXPECT_LE(*r.iterations_to_cover, *r.iterations_to_optimal);
    EXPECT_EQ(r.invariants.total(), 0u);
    if (r.last_stage_start) EXPECT_GT(*r.last_stage_start, *r.iterations_to_cover);
  }
}

TEST(Runner, FullRunWorksForEvenN) {
  RunOptions o;
  o.max_iters = 1'000'000;
  const auto r = run_full(8, 4, o);
  EXPECT_TRUE(r.iterations_to_cover.has_value());
  EXPECT_TRUE(r.iterations_to_optimal.has_value());
  EXPECT_TRUE(r.phases.empty());
}

TEST(Runner, StepAfterOptimumThrows) {
  auto trial = last_stage_trial(3, 1, {});
  while (!trial.done()) trial.step();
  EXPECT_THROW(trial.step(), std::logic_error);
}

TEST(Stats, SampleStats) {
  const auto s = sample_stats({4, 1, 3, 2});
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(sample_stats({}).count, 0u);
  EXPECT_DOUBLE_EQ(sample_stats({7}).median, 7);
}

TEST(Stats, LogLogFitRecoversPowerLaw) {
  const std::vector<double> n{15, 31, 63, 127};
  std::vector<double> t;
  for (double x : n) t.push_back(3.0 * x * x);
  const auto f = fit_log_log(n, t);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-9);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_THROW(fit_log_log(std::vector<double>{15}, std::vector<double>{10}), std::invalid_argument);
  EXPECT_THROW(fit_log_log(std::vector<double>{15, 15}, std::vector<double>{10, 11}), std::invalid_argument);
}

TEST(Experiment, ConfigParsing) {
  const auto c = experiment_config_from_json(nlohmann::json::parse(
      R"({"n_list":[15,31],"trials":3,"mode":"full-run","seed":9,"trace":"states","out_dir":"x"})"));
  EXPECT_EQ(c.n_list, (std::vector<std::size_t>{15, 31}));
  EXPECT_EQ(c.mode, RunMode::kFullRun);
  EXPECT_EQ(c.max_iters, kDefaultFullRunIters);
  EXPECT_EQ(c.trace, TraceLevel::kStates);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"n_list":[16,31]})")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"n_list":[15],"bogus":1})")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"trials":3})")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"n_list":[15],"mode":"x"})")), ConfigError);
  EXPECT_NO_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"n_list":[16],"mode":"full-run"})")));
}

TEST(Experiment, ScalingStudyNeedsTwoSizes) {
  ExperimentConfig c;
  c.n_list = {15};
  EXPECT_THROW(scaling_study(c, 1), ConfigError);
  c.n_list = {15, 15};
  EXPECT_THROW(scaling_study(c, 1), ConfigError);
}

TEST(Experiment, AggregationIgnoresScheduling) {
  ExperimentConfig c;
  c.n_list = {7, 15};
  c.trials = 12;
  c.seed = 4;
  const auto one = run_study(c, 1);
  const auto many = run_study(c, 4);
  std::ostringstream a, b;
  write_results_csv(a, one.rows);
  write_results_csv(b, many.rows);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(fit_document(one).dump(), fit_document(many).dump());
}

TEST(Experiment, RowsUseDerivedSeedsAndMatchSingleRuns) {
  ExperimentConfig c;
  c.n_list = {11, 21};
  c.trials = 3;
  c.seed = 5;
  const auto study = run_study(c, 2);
  ASSERT_EQ(study.rows.size(), 6u);
  for (const auto& row : study.rows) {
    EXPECT_EQ(row.seed, derive_seed(5, row.n, row.trial));
    EXPECT_EQ(row.iters_to_optimal, run_last_stage(row.n, row.seed).iterations_to_optimal);
  }
}

TEST(Experiment, TruncatedTrialsAreExcludedWithWarning) {
  ExperimentConfig c;
  c.n_list = {31, 63};
  c.trials = 4;
  c.max_iters = 50;
  const auto study = run_study(c, 1);
  EXPECT_EQ(study.truncated(), 8u);
  EXPECT_EQ(study.sizes[0].optimal.count, 0u);
  EXPECT_FALSE(study.optimal_fit.has_value());
  EXPECT_EQ(study.warnings.size(), 2u);
}

TEST(Experiment, WritesFiles) {
  const auto dir = temp_dir("files");
  ExperimentConfig c;
  c.n_list = {7, 11, 15};
  c.trials = 5;
  c.trace = TraceLevel::kStates;
  c.out_dir = dir.string();
  const auto study = scaling_study(c, 2);
  write_study(study);
  const std::string csv = slurp(dir / "results.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 15);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "n,seed,iters_to_cover,iters_to_optimal,n_phases,frac_state1,frac_state2,frac_state3");
  const std::string plot = slurp(dir / "plot.dat");
  EXPECT_EQ(std::count(plot.begin(), plot.end(), '\n'), 4);
  const auto fit = nlohmann::json::parse(slurp(dir / "fit.json"));
  EXPECT_NEAR(fit["fit"]["slope"].get<double>(), study.optimal_fit->slope, 1e-12);
  EXPECT_TRUE(std::filesystem::exists(trace_path(dir, 7, 0)));
  std::ifstream trace(trace_path(dir, 11, 4));
  const auto file = read_trace(trace);
  EXPECT_EQ(file.meta["n"], 11);
  EXPECT_TRUE(file.end.has_value());
  EXPECT_EQ(segment_phases(file.records).back().ended_optimal, true);
  std::filesystem::remove_all(dir);
}

TEST(Experiment, ParallelForPropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t k) {
                              if (k == 5) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t k) { hits[k] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
}

TEST(LemmaSuite, NoHardFailuresAtSmallN) {
  const auto r = lemma_suite(7, 40, 1);
  EXPECT_EQ(r.samples(), 40u);
  EXPECT_EQ(r.synthetic, 20u);
  EXPECT_EQ(r.harvested, 20u);
  EXPECT_EQ(r.indices_checked, 40u * 8);
  EXPECT_EQ(r.hard_failure_count(), 0u);
  for (const auto& f : r.hard_failures) ADD_FAILURE() << f;
  std::uint64_t tallied = 0;
  for (const auto& [key, t] : r.table1) tallied += t.pass + t.fail;
  EXPECT_GE(tallied, r.indices_checked);
}

TEST(LemmaSuite, RejectsOutOfRangeN) {
  EXPECT_THROW(lemma_suite(15, 1, 1), std::domain_error);
  EXPECT_THROW(lemma_suite(3, 1, 1), std::domain_error);
  EXPECT_THROW(lemma_suite(8, 1, 1), std::domain_error);
}

TEST(LemmaSuite, HarvestedPopulationsAreAlmostBalanced) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto levels = harvest_population(9, s);
    EXPECT_TRUE(classify_positions(column_counts(levels)).almost_balanced());
  }
}

TEST(LemmaSuite, PredictedShapeCountsForSmallExample) {
  const auto levels = parse_population("000\n001\n011\n111\n");
  const auto pb = classify_positions(column_counts(levels));
  EXPECT_TRUE(predicted_replacements(levels, pb, 0).valid.empty());  // I00 at i = 0: no one-bit to move
  EXPECT_EQ(predicted_replacements(levels, pb, 1).valid.size(), 2u);
  EXPECT_EQ(predicted_replacements(levels, pb, 3).valid.size(), 0u);
}

TEST(MonteCarlo, FrequenciesAgreeWithExactValues) {
  RandomSource rng(12);
  auto levels = random_optimal_levels(5, rng);
  perturb_to_almost_balanced(levels, rng);
  const auto checks = monte_carlo_check(levels, 200'000, 3);
  ASSERT_EQ(checks.size(), 7u);
  for (const auto& c : checks) EXPECT_TRUE(c.within(4.0)) << c.label << " z=" << c.z;
  EXPECT_EQ(checks.back().label, "optimal");
}

TEST(MonteCarlo, BinomialZ) {
  EXPECT_DOUBLE_EQ(binomial_z(0, 100, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(binomial_z(1, 100, 0.0)));
  EXPECT_DOUBLE_EQ(binomial_z(50, 100, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(binomial_z(60, 100, 0.5), 2.0);
}
