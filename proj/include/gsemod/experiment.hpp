#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsemod/runner.hpp"

namespace gsemod {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_list;
  std::size_t trials = 1;
  RunMode mode = RunMode::kLastStage;
  std::uint64_t max_iters = kDefaultLastStageIters;
  std::uint64_t seed = 1;
  TraceLevel trace = TraceLevel::kSilent;
  std::string out_dir = "results";

  void validate() const {
    if (n_list.empty()) throw ConfigError("n_list is empty");
    if (trials == 0) throw ConfigError("trials must be positive");
    if (max_iters == 0) throw ConfigError("max_iters must be positive");
    for (std::size_t n : n_list) {
      if (n < 1) throw ConfigError("n must be at least 1");
      if (mode == RunMode::kLastStage && (n % 2 == 0 || n < 3)) throw ConfigError("n must be odd and >= 3 for last-stage runs");
    }
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"n_list", c.n_list},  {"trials", c.trials},         {"mode", to_string(c.mode)},
          {"max_iters", c.max_iters}, {"seed", c.seed}, {"trace", to_string(c.trace)},
          {"out_dir", c.out_dir}};
}

// Missing keys keep their defaults; max_iters defaults by mode.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"n_list", "trials", "mode", "max_iters", "seed", "trace", "out_dir"};
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw ConfigError("unknown config key: " + key);
    }
    c.n_list = j.at("n_list").get<std::vector<std::size_t>>();
    c.trials = j.value("trials", c.trials);
    if (j.contains("mode")) {
      auto mode = run_mode_from_string(j.at("mode").get<std::string>());
      if (!mode) throw ConfigError("mode must be last-stage or full-run");
      c.mode = *mode;
    }
    c.max_iters = c.mode == RunMode::kLastStage ? kDefaultLastStageIters : kDefaultFullRunIters;
    c.max_iters = j.value("max_iters", c.max_iters);
    c.seed = j.value("seed", c.seed);
    if (j.contains("trace")) {
      auto level = trace_level_from_string(j.at("trace").get<std::string>());
      if (!level) throw ConfigError("trace must be silent, states or full");
      c.trace = *level;
    }
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

inline std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs fn(k) for k in [0, count) on up to `jobs` threads. Each k is handled
// by exactly one worker; the first exception is rethrown after all workers
// stop.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

// Summary of one trial as written to the results CSV.
struct TrialRow {
  std::size_t n = 0;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> iters_to_cover;
  std::optional<std::uint64_t> iters_to_optimal;
  std::size_t n_phases = 0;
  std::array<std::uint64_t, 3> state_iterations{};
  bool truncated = false;
  std::uint64_t invariant_violations = 0;
};

inline TrialRow trial_row(const RunResult& r, std::uint64_t trial) {
  TrialRow row;
  row.n = r.n;
  row.trial = trial;
  row.seed = r.seed;
  row.iters_to_cover = r.iterations_to_cover;
  row.iters_to_optimal = r.iterations_to_optimal;
  row.n_phases = r.phases.size();
  row.state_iterations = r.state_iterations;
  row.truncated = r.truncated;
  row.invariant_violations = r.invariants.total();
  return row;
}

struct SampleStats {
  std::size_t count = 0;
  double mean = 0;
  double median = 0;
  double stddev = 0;
  double ci95 = 0;  // half-width, normal approximation
  double min = 0;
  double max = 0;
};

inline SampleStats sample_stats(std::vector<double> values) {
  SampleStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  const std::size_t mid = s.count / 2;
  s.median = s.count % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  if (s.count > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
    s.ci95 = 1.96 * s.stddev / std::sqrt(static_cast<double>(s.count));
  }
  s.min = values.front();
  s.max = values.back();
  return s;
}

struct LogLogFit {
  double slope = 0;
  double intercept = 0;  // log(T) = intercept + slope * log(n)
  double r2 = 0;
};

// Least squares of log(y) against log(x). Needs at least two distinct x.
inline LogLogFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit needs equally many x and y values");
  std::set<double> distinct(x.begin(), x.end());
  if (distinct.size() < 2) throw std::invalid_argument("fit needs at least two distinct n");
  const auto k = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw std::domain_error("log-log fit needs positive values");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  LogLogFit f;
  const double cov = sxy - sx * sy / k;
  const double varx = sxx - sx * sx / k;
  const double vary = syy - sy * sy / k;
  f.slope = cov / varx;
  f.intercept = (sy - f.slope * sx) / k;
  f.r2 = vary > 0 ? cov * cov / (varx * vary) : 1.0;
  return f;
}

struct SizeSummary {
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t truncated = 0;
  SampleStats optimal;  // iterations to the optimum, finished trials only
  SampleStats cover;    // full-run only
  std::array<std::uint64_t, 3> state_iterations{};
  std::uint64_t phases = 0;
  std::uint64_t invariant_violations = 0;
};

struct StudyResult {
  ExperimentConfig config;
  std::vector<TrialRow> rows;  // ordered by (position in n_list, trial)
  std::vector<SizeSummary> sizes;
  std::optional<LogLogFit> optimal_fit;
  std::optional<LogLogFit> cover_fit;
  std::vector<std::string> warnings;

  std::size_t truncated() const {
    std::size_t t = 0;
    for (const auto& s : sizes) t += s.truncated;
    return t;
  }
};

inline std::filesystem::path trace_path(const std::filesystem::path& dir, std::size_t n, std::uint64_t trial) {
  return dir / "traces" / ("n" + std::to_string(n) + "_t" + std::to_string(trial) + ".jsonl");
}

// Meta line written at the top of every trace file.
inline nlohmann::json trace_meta(std::size_t n, std::uint64_t seed, RunMode mode, std::uint64_t max_iters,
                                 TraceLevel level) {
  return {{"type", "meta"},          {"n", n},           {"seed", seed},
          {"mode", to_string(mode)}, {"max_iters", max_iters}, {"trace", to_string(level)}};
}

inline nlohmann::json trace_end(const RunResult& r) {
  nlohmann::json j{{"type", "end"}, {"iterations", r.iterations}, {"truncated", r.truncated}};
  j["iterations_to_cover"] = r.iterations_to_cover ? nlohmann::json(*r.iterations_to_cover) : nlohmann::json(nullptr);
  j["iterations_to_optimal"] = r.iterations_to_optimal ? nlohmann::json(*r.iterations_to_optimal) : nlohmann::json(nullptr);
  return j;
}

// One trial, streaming its trace to `trace_file` when given.
inline RunResult run_trial(std::size_t n, std::uint64_t seed, RunMode mode, std::uint64_t max_iters, TraceLevel level,
                           const std::optional<std::filesystem::path>& trace_file) {
  RunOptions options;
  options.max_iters = max_iters;
  options.trace = trace_file ? level : TraceLevel::kSilent;
  std::ofstream out;
  if (trace_file && level != TraceLevel::kSilent) {
    std::filesystem::create_directories(trace_file->parent_path());
    out.open(*trace_file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + trace_file->string());
    out << trace_meta(n, seed, mode, max_iters, level).dump() << '\n';
    options.sink = [&out](const TraceRecord& r) { out << to_json(r).dump() << '\n'; };
  }
  RunResult result = mode == RunMode::kLastStage ? run_last_stage(n, seed, std::move(options))
                                                 : run_full(n, seed, std::move(options));
  if (out.is_open()) out << trace_end(result).dump() << '\n';
  return result;
}

// Runs every (n, trial) pair. Trial k of size n uses stream
// derive_seed(seed, n, k), so the rows do not depend on scheduling.
inline StudyResult run_study(const ExperimentConfig& cfg, std::size_t jobs) {
  cfg.validate();
  StudyResult study;
  study.config = cfg;
  const std::size_t total = cfg.n_list.size() * cfg.trials;
  study.rows.resize(total);
  const std::filesystem::path out_dir(cfg.out_dir);
  parallel_for(total, jobs, [&](std::size_t k) {
    const std::size_t n = cfg.n_list[k / cfg.trials];
    const std::uint64_t trial = k % cfg.trials;
    const std::uint64_t seed = derive_seed(cfg.seed, n, trial);
    std::optional<std::filesystem::path> trace;
    if (cfg.trace != TraceLevel::kSilent) trace = trace_path(out_dir, n, trial);
    study.rows[k] = trial_row(run_trial(n, seed, cfg.mode, cfg.max_iters, cfg.trace, trace), trial);
  });

  std::vector<double> fit_n, fit_t, cover_n, cover_t;
  for (std::size_t g = 0; g < cfg.n_list.size(); ++g) {
    SizeSummary s;
    s.n = cfg.n_list[g];
    std::vector<double> optimal, cover;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const TrialRow& row = study.rows[g * cfg.trials + t];
      ++s.trials;
      if (row.truncated) ++s.truncated;
      if (row.iters_to_optimal) optimal.push_back(static_cast<double>(*row.iters_to_optimal));
      if (row.iters_to_cover) cover.push_back(static_cast<double>(*row.iters_to_cover));
      for (std::size_t q = 0; q < 3; ++q) s.state_iterations[q] += row.state_iterations[q];
      s.phases += row.n_phases;
      s.invariant_violations += row.invariant_violations;
    }
    s.optimal = sample_stats(optimal);
    s.cover = sample_stats(cover);
    if (s.truncated > 0) {
      study.warnings.push_back("n=" + std::to_string(s.n) + ": " + std::to_string(s.truncated) +
                               " truncated trial(s) excluded from the statistics");
    }
    if (s.invariant_violations > 0) {
      study.warnings.push_back("n=" + std::to_string(s.n) + ": " + std::to_string(s.invariant_violations) +
                               " run invariant violation(s)");
    }
    if (s.optimal.count > 0) {
      fit_n.push_back(static_cast<double>(s.n));
      fit_t.push_back(s.optimal.mean);
    }
    if (cfg.mode == RunMode::kFullRun && s.cover.count > 0) {
      cover_n.push_back(static_cast<double>(s.n));
      cover_t.push_back(s.cover.mean);
    }
    study.sizes.push_back(s);
  }
  if (std::set<double>(fit_n.begin(), fit_n.end()).size() >= 2) study.optimal_fit = fit_log_log(fit_n, fit_t);
  if (std::set<double>(cover_n.begin(), cover_n.end()).size() >= 2) study.cover_fit = fit_log_log(cover_n, cover_t);
  return study;
}

// Scaling study: requires at least two distinct problem sizes.
inline StudyResult scaling_study(const ExperimentConfig& cfg, std::size_t jobs) {
  if (std::set<std::size_t>(cfg.n_list.begin(), cfg.n_list.end()).size() < 2) {
    throw ConfigError("a scaling fit needs at least two distinct n");
  }
  return run_study(cfg, jobs);
}

// Shortest round-trip decimal form, independent of locale.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_fraction(std::uint64_t part, std::uint64_t whole) {
  if (whole == 0) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(part) / static_cast<double>(whole));
  return buf;
}

inline void write_results_csv(std::ostream& out, std::span<const TrialRow> rows) {
  out << "n,seed,iters_to_cover,iters_to_optimal,n_phases,frac_state1,frac_state2,frac_state3\n";
  for (const auto& r : rows) {
    const std::uint64_t states = r.state_iterations[0] + r.state_iterations[1] + r.state_iterations[2];
    out << r.n << ',' << r.seed << ',' << (r.iters_to_cover ? std::to_string(*r.iters_to_cover) : "") << ','
        << (r.iters_to_optimal ? std::to_string(*r.iters_to_optimal) : "") << ',' << r.n_phases << ','
        << format_fraction(r.state_iterations[0], states) << ',' << format_fraction(r.state_iterations[1], states)
        << ',' << format_fraction(r.state_iterations[2], states) << '\n';
  }
}

inline void write_plot_data(std::ostream& out, const StudyResult& study) {
  out << "# n mean_T\n";
  for (const auto& s : study.sizes) {
    if (s.optimal.count > 0) out << s.n << ' ' << format_double(s.optimal.mean) << '\n';
  }
}

inline nlohmann::json to_json(const SampleStats& s) {
  return {{"count", s.count},   {"mean", s.mean}, {"median", s.median}, {"stddev", s.stddev},
          {"ci95", s.ci95},     {"min", s.min},   {"max", s.max}};
}

inline nlohmann::json to_json(const LogLogFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

inline nlohmann::json fit_document(const StudyResult& study) {
  nlohmann::json j;
  j["config"] = to_json(study.config);
  j["fit"] = study.optimal_fit ? to_json(*study.optimal_fit) : nlohmann::json(nullptr);
  if (study.config.mode == RunMode::kFullRun) {
    j["cover_fit"] = study.cover_fit ? to_json(*study.cover_fit) : nlohmann::json(nullptr);
  }
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& s : study.sizes) {
    nlohmann::json e{{"n", s.n},
                     {"trials", s.trials},
                     {"truncated", s.truncated},
                     {"iterations_to_optimal", to_json(s.optimal)},
                     {"phases", s.phases},
                     {"state_iterations", s.state_iterations},
                     {"invariant_violations", s.invariant_violations}};
    if (study.config.mode == RunMode::kFullRun) e["iterations_to_cover"] = to_json(s.cover);
    sizes.push_back(e);
  }
  j["sizes"] = sizes;
  j["warnings"] = study.warnings;
  return j;
}

// results.csv, plot.dat and fit.json under cfg.out_dir.
inline void write_study(const StudyResult& study) {
  const std::filesystem::path dir(study.config.out_dir);
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("results.csv");
    write_results_csv(f, study.rows);
  }
  {
    auto f = open("plot.dat");
    write_plot_data(f, study);
  }
  {
    auto f = open("fit.json");
    f << fit_document(study).dump(2) << '\n';
  }
}

}  // namespace gsemod
