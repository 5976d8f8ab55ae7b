#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gsemod/experiment.hpp"
#include "gsemod/lemma_suite.hpp"
#include "gsemod/phases.hpp"
#include "gsemod/runner.hpp"
#include "gsemod/trace.hpp"

namespace gsemod::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kTruncated = 2,
  kExcessTruncation = 3,
  kUsage = 64,
  kData = 65,
};

inline constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0   success (run: optimum reached)\n"
    "  1   verify: an exact check failed\n"
    "  2   run: truncated at --max-iters\n"
    "  3   scale: more than 1% of trials truncated\n"
    "  64  invalid flags\n"
    "  65  malformed or empty input data\n"
    "Output directory: --out, else $GSEMOD_OUT_DIR, else ./results\n";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --out, else $GSEMOD_OUT_DIR, else ./results. The environment variable also
// overrides out_dir from a scale config file.
inline std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("GSEMOD_OUT_DIR"); env && *env) return env;
  return "results";
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

struct RunFlags {
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string init = "almost-balanced";
  std::uint64_t max_iters = 0;
  std::string trace_path;
  std::string trace_level = "states";
  std::string out;
};

inline nlohmann::json run_summary(const RunFlags& f, std::uint64_t max_iters, const RunResult& r, Diversity final_d) {
  nlohmann::json j;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["init"] = f.init;
  j["max_iters"] = max_iters;
  j["iterations"] = r.iterations;
  j["iterations_to_cover"] = r.iterations_to_cover ? nlohmann::json(*r.iterations_to_cover) : nlohmann::json(nullptr);
  j["iterations_to_optimal"] = r.iterations_to_optimal ? nlohmann::json(*r.iterations_to_optimal) : nlohmann::json(nullptr);
  j["truncated"] = r.truncated;
  j["final_diversity"] = final_d;
  for (std::size_t k = 0; k < 4; ++k) {
    j["acceptance"][std::string(to_string(static_cast<AcceptanceKind>(k)))] = r.acceptance_counts[k];
  }
  j["state_iterations"] = r.state_iterations;
  j["phases"] = r.phases.size();
  j["invariant_violations"] = r.invariants.total();
  return j;
}

inline int cmd_run(const RunFlags& f, std::ostream& out) {
  const bool last_stage = f.init == "almost-balanced";
  if (f.n < 1) throw UsageError("--n must be at least 1");
  if (last_stage && f.n % 2 == 0) throw UsageError("n must be odd for --init almost-balanced");
  if (last_stage && f.n < 3) throw UsageError("--init almost-balanced needs n >= 3");
  const TraceLevel level = *trace_level_from_string(f.trace_level);
  const std::uint64_t max_iters = f.max_iters ? f.max_iters : (last_stage ? kDefaultLastStageIters : kDefaultFullRunIters);

  RunOptions options;
  options.max_iters = max_iters;
  std::ofstream trace;
  const RunMode mode = last_stage ? RunMode::kLastStage : RunMode::kFullRun;
  if (!f.trace_path.empty()) {
    const std::filesystem::path p(f.trace_path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    trace.open(p, std::ios::binary | std::ios::trunc);
    if (!trace) throw std::runtime_error("cannot write " + f.trace_path);
    trace << trace_meta(f.n, f.seed, mode, max_iters, level).dump() << '\n';
    options.trace = level;
    options.sink = [&trace](const TraceRecord& r) { trace << to_json(r).dump() << '\n'; };
  }
  Trial trial = last_stage ? last_stage_trial(f.n, f.seed, std::move(options))
                           : full_run_trial(f.n, f.seed, std::move(options));
  while (!trial.done()) trial.step();
  const Diversity final_d = trial.archive().diversity();
  const RunResult r = trial.finish();
  if (trace.is_open()) trace << trace_end(r).dump() << '\n';

  const auto dir = output_dir(f.out);
  const auto summary = dir / ("run_n" + std::to_string(f.n) + "_seed" + std::to_string(f.seed) + ".json");
  write_json(summary, run_summary(f, max_iters, r, final_d));

  out << "n=" << f.n << " seed=" << f.seed << " init=" << f.init << ": ";
  if (r.truncated) {
    out << "truncated after " << r.iterations << " iterations (D = " << final_d << ")\n";
  } else {
    out << "optimal after " << *r.iterations_to_optimal << " iterations (D = " << final_d << ")\n";
  }
  if (r.iterations_to_cover && !last_stage) out << "front covered after " << *r.iterations_to_cover << " iterations\n";
  out << "summary: " << summary.string() << '\n';
  return r.truncated ? kTruncated : kOk;
}

struct ScaleFlags {
  std::vector<std::size_t> n_list;
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  std::string mode = "last-stage";
  std::uint64_t max_iters = 0;
  std::string trace = "silent";
  std::string config;
  std::string out;
  std::size_t jobs = 0;
};

inline int cmd_scale(const ScaleFlags& f, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot read config " + f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    cfg = experiment_config_from_json(j);
  }
  if (sub.count("--n")) cfg.n_list = f.n_list;
  if (sub.count("--trials") || f.config.empty()) cfg.trials = f.trials;
  if (sub.count("--seed") || f.config.empty()) cfg.seed = f.seed;
  if (sub.count("--mode") || f.config.empty()) cfg.mode = *run_mode_from_string(f.mode);
  if (sub.count("--trace") || f.config.empty()) cfg.trace = *trace_level_from_string(f.trace);
  if (sub.count("--max-iters")) {
    cfg.max_iters = f.max_iters;
  } else if (f.config.empty()) {
    cfg.max_iters = cfg.mode == RunMode::kLastStage ? kDefaultLastStageIters : kDefaultFullRunIters;
  }
  if (sub.count("--out") || f.config.empty() || std::getenv("GSEMOD_OUT_DIR")) cfg.out_dir = output_dir(f.out).string();
  cfg.validate();

  const StudyResult study = scaling_study(cfg, f.jobs ? f.jobs : default_jobs());
  write_study(study);
  for (const auto& w : study.warnings) err << "warning: " << w << '\n';

  out << "mode=" << to_string(cfg.mode) << " seed=" << cfg.seed << " trials/n=" << cfg.trials << '\n';
  out << std::setw(6) << "n" << std::setw(14) << "mean_T" << std::setw(14) << "median_T" << std::setw(12) << "ci95"
      << std::setw(11) << "truncated";
  if (cfg.mode == RunMode::kFullRun) out << std::setw(14) << "mean_cover";
  out << '\n';
  for (const auto& s : study.sizes) {
    out << std::setw(6) << s.n << std::setw(14) << std::fixed << std::setprecision(1) << s.optimal.mean
        << std::setw(14) << s.optimal.median << std::setw(12) << s.optimal.ci95 << std::setw(11) << s.truncated;
    if (cfg.mode == RunMode::kFullRun) out << std::setw(14) << s.cover.mean;
    out << '\n';
  }
  out << std::setprecision(4);
  if (study.optimal_fit) out << "slope (log mean T vs log n): " << study.optimal_fit->slope << '\n';
  if (study.cover_fit) out << "cover slope (log mean cover vs log n): " << study.cover_fit->slope << '\n';
  out << "results: " << cfg.out_dir << '\n';

  const std::size_t total = study.rows.size();
  if (study.truncated() * 100 > total) return kExcessTruncation;
  return kOk;
}

struct VerifyFlags {
  std::size_t n = 0;
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  double slack = kDefaultSlack;
  std::string out;
};

inline int cmd_verify(const VerifyFlags& f, std::ostream& out) {
  if (f.n % 2 == 0 || f.n < 5 || f.n > oracle::kEnumerationLimit) {
    throw UsageError("verify needs odd n with 5 <= n <= " + std::to_string(oracle::kEnumerationLimit));
  }
  if (f.samples == 0) throw UsageError("--samples must be positive");
  const LemmaReport report = lemma_suite(f.n, f.samples, f.seed, f.slack);
  const auto dir = output_dir(f.out);
  const auto path = dir / ("verify_n" + std::to_string(f.n) + "_seed" + std::to_string(f.seed) + ".json");
  write_json(path, to_json(report));

  out << "n=" << f.n << " samples=" << report.samples() << " (" << report.synthetic << " synthetic, "
      << report.harvested << " harvested) indices=" << report.indices_checked << '\n';
  out << "exact checks:\n";
  out << "  replacement set shapes   " << (report.characterization_mismatches ? "FAIL" : "pass") << " ("
      << report.characterization_mismatches << " mismatches)\n";
  out << "  structural relations     " << (report.structure_violations ? "FAIL" : "pass") << " ("
      << report.structure_violations << " violations)\n";
  out << "  I01 probability zero     " << (report.i01_nonzero ? "FAIL" : "pass") << " (" << report.i01_nonzero
      << " nonzero)\n";
  out << "probability bounds (advisory, slack " << f.slack << "):\n";
  for (const auto& [key, tally] : report.table1) {
    out << "  " << std::left << std::setw(9) << to_string(key.first) << std::setw(10) << to_string(key.second)
        << std::right << (tally.fail ? "advisory" : "pass") << "  " << tally.pass << '/' << (tally.pass + tally.fail)
        << '\n';
  }
  for (const auto& failure : report.hard_failures) out << "failure: " << failure << '\n';
  out << "report: " << path.string() << '\n';
  return report.hard_failure_count() ? kCheckFailed : kOk;
}

struct PhasesFlags {
  std::string trace;
  std::string out;
};

inline int cmd_phases(const PhasesFlags& f, std::ostream& out, std::ostream& err) {
  std::ifstream in(f.trace, std::ios::binary);
  if (!in) {
    err << "error: cannot read " << f.trace << '\n';
    return kData;
  }
  std::vector<Phase> phases;
  try {
    const TraceFile file = read_trace(in);
    phases = segment_phases(file.records);
  } catch (const MalformedTrace& e) {
    err << "error: malformed trace: " << e.what() << '\n';
    return kData;
  }
  if (phases.empty()) {
    err << "error: trace has no almost balanced iterations\n";
    return kData;
  }

  std::array<std::uint64_t, 3> occupancy{};
  std::map<PhaseEnd, std::uint64_t> reasons;
  std::map<std::uint64_t, std::uint64_t> histogram;  // bucket lower bound (power of two) -> phases
  std::uint64_t ended_optimal = 0;
  for (const auto& p : phases) {
    for (std::size_t q = 0; q < 3; ++q) occupancy[q] += p.state_iterations[q];
    ++reasons[p.end_reason];
    std::uint64_t bucket = 1;
    while (bucket * 2 <= p.length()) bucket *= 2;
    ++histogram[bucket];
    ended_optimal += p.ended_optimal ? 1 : 0;
  }
  const std::uint64_t total = occupancy[0] + occupancy[1] + occupancy[2];

  out << "phases: " << phases.size() << ", ended optimal: " << ended_optimal << " ("
      << format_fraction(ended_optimal, phases.size()) << ")\n";
  out << "final phase: " << to_string(phases.back().end_reason)
      << (phases.back().ended_optimal ? ", ended optimal" : "") << '\n';
  out << "state occupancy over " << total << " iterations:";
  for (std::size_t q = 0; q < 3; ++q) out << " S" << q + 1 << "=" << format_fraction(occupancy[q], total);
  out << '\n';
  out << "end reasons:\n";
  for (const auto& [reason, count] : reasons) out << "  " << std::left << std::setw(22) << to_string(reason) << std::right << count << '\n';
  out << "phase length histogram:\n";
  for (const auto& [bucket, count] : histogram) {
    out << "  [" << bucket << ", " << bucket * 2 << ")  " << count << '\n';
  }

  if (!f.out.empty()) {
    nlohmann::json j;
    j["trace"] = f.trace;
    j["phases"] = nlohmann::json::array();
    for (const auto& p : phases) {
      j["phases"].push_back({{"start", p.start_iter},
                             {"end", p.end_iter},
                             {"length", p.length()},
                             {"end_reason", to_string(p.end_reason)},
                             {"ended_optimal", p.ended_optimal},
                             {"state_iterations", p.state_iterations}});
    }
    j["state_iterations"] = occupancy;
    write_json(f.out, j);
  }
  return kOk;
}

// Full command line without the program name. Human-readable output goes to
// `out`, diagnostics to `err`.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GSEMO with diversity tie-breaking on OneMinMax: runs, scaling studies, lemma checks, phase reports",
               "gsemod"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "one seeded trial");
  run_cmd->add_option("--n", run.n, "problem size")->required();
  run_cmd->add_option("--seed", run.seed, "stream seed");
  run_cmd->add_option("--init", run.init, "start population")->check(CLI::IsMember({"random", "almost-balanced"}));
  run_cmd->add_option("--max-iters", run.max_iters, "iteration cap (default 1e7 last-stage, 1e8 full run)");
  run_cmd->add_option("--trace", run.trace_path, "write a JSONL trace to this file");
  run_cmd->add_option("--trace-level", run.trace_level, "trace detail")->check(CLI::IsMember({"states", "full"}));
  run_cmd->add_option("--out", run.out, "directory for the result summary");

  ScaleFlags scale;
  auto* scale_cmd = app.add_subcommand("scale", "hitting-time scaling study with a log-log fit");
  scale_cmd->add_option("--n", scale.n_list, "comma-separated problem sizes")->delimiter(',');
  scale_cmd->add_option("--trials", scale.trials, "trials per n");
  scale_cmd->add_option("--seed", scale.seed, "master seed");
  scale_cmd->add_option("--mode", scale.mode, "start population")->check(CLI::IsMember({"last-stage", "full-run"}));
  scale_cmd->add_option("--max-iters", scale.max_iters, "iteration cap per trial");
  scale_cmd->add_option("--trace", scale.trace, "per-trial traces")->check(CLI::IsMember({"silent", "states", "full"}));
  scale_cmd->add_option("--config", scale.config, "JSON config; explicit flags override it");
  scale_cmd->add_option("--out", scale.out, "output directory");
  scale_cmd->add_option("--jobs", scale.jobs, "worker threads (default: hardware concurrency)");

  VerifyFlags verify;
  auto* verify_cmd = app.add_subcommand("verify", "exact lemma checks on sampled almost balanced populations");
  verify_cmd->add_option("--n", verify.n, "odd problem size, 5..13")->required();
  verify_cmd->add_option("--samples", verify.samples, "populations to check");
  verify_cmd->add_option("--seed", verify.seed, "master seed");
  verify_cmd->add_option("--slack", verify.slack, "constant c in the (1 +- c/n) bound factors");
  verify_cmd->add_option("--out", verify.out, "output directory");

  PhasesFlags phases;
  auto* phases_cmd = app.add_subcommand("phases", "phase statistics of a trace file");
  phases_cmd->add_option("trace", phases.trace, "trace file written by run --trace")->required();
  phases_cmd->add_option("--out", phases.out, "write the phase list as JSON to this file");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*scale_cmd) {
      if (scale.config.empty() && scale_cmd->count("--n") == 0) throw UsageError("scale needs --n or --config");
      return cmd_scale(scale, *scale_cmd, out, err);
    }
    if (*verify_cmd) return cmd_verify(verify, out);
    if (*phases_cmd) return cmd_phases(phases, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace gsemod::cli
