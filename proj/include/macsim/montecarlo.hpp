#pragma once

#include <algorithm>
#include <string>
#include <thread>
#include <vector>

#include "macsim/adversary.hpp"
#include "macsim/fairness.hpp"
#include "macsim/protocols/busy_wrapper.hpp"
#include "macsim/protocols/cd_static.hpp"
#include "macsim/protocols/probability_increase.hpp"
#include "macsim/simulator.hpp"
#include "macsim/stats.hpp"
#include "macsim/util.hpp"

namespace macsim {

/// Which entry protocol to run and with what parameters.
struct ProtocolSpec {
  std::string name = "pi-mod";  // pi-mod | cis-willard | cis-willard-dyn
  Fraction epsilon{1, 16};
  bool fairness = false;
  int pi_phase_len = 0;   // optional overrides of the derived sizes
  int pi_num_phases = 0;

  std::string describe() const {
    std::string s = name + "(eps=" + epsilon.str() + ")";
    if (fairness) s = "fair[" + s + "]";
    return s;
  }
};

/// Builds the protocol factory, enforcing capability requirements: the
/// KN-model protocol needs n, the CD-stack protocols need collision
/// detection, and so does the fairness wrapper.
inline ProtocolFactory build_protocol(const ProtocolSpec& spec, const Capabilities& caps) {
  ProtocolFactory base;
  if (spec.name == "pi-mod") {
    if (!caps.kn)
      throw ConfigError("pi-mod needs the process count: run with KN (--n sets it)");
    PIConfig cfg;
    cfg.n = caps.n;
    cfg.epsilon = spec.epsilon;
    cfg.phase_len = spec.pi_phase_len;
    cfg.num_phases = spec.pi_num_phases;
    base = probability_increase_modified(cfg);
  } else if (spec.name == "cis-willard") {
    if (!caps.cd) throw ConfigError("cis-willard needs collision detection (--cd)");
    base = cd_static_protocol(CISConfig{spec.epsilon});
  } else if (spec.name == "cis-willard-dyn") {
    if (!caps.cd) throw ConfigError("cis-willard-dyn needs collision detection (--cd)");
    base = static_to_dynamic(cd_static_protocol(CISConfig{spec.epsilon}));
  } else {
    throw ConfigError("unknown protocol \"" + spec.name +
                      "\" (expected pi-mod, cis-willard or cis-willard-dyn)");
  }
  if (spec.fairness) {
    if (!caps.cd) throw ConfigError("the fairness wrapper needs collision detection (--cd)");
    FairnessConfig fc;
    fc.base = base;
    fc.id_bits = std::max(1, ceil_log2(static_cast<std::uint64_t>(caps.n)));
    return fairness_wrap(fc);
  }
  return base;
}

inline const std::vector<std::string>& arrival_suite() {
  static const std::vector<std::string> names = {"static", "solo",    "staggered",
                                                 "wave",   "rolling", "random"};
  return names;
}

/// Named arrival patterns used by the Monte Carlo harness. "random" draws
/// fresh arrival offsets per trial from the trial seed; the rest are fixed.
inline AdversaryStrategy make_scenario(const std::string& name, int n, int critical_len,
                                       std::uint64_t trial_seed) {
  AdversaryStrategy s;
  s.per_process.resize(n);
  const int c = critical_len;
  if (name == "static") {
    for (int p = 0; p < n; ++p) s.per_process[p] = {{0, c}};
  } else if (name == "solo") {
    s.per_process[0] = {{0, c}};  // everyone else stays in the remainder section
  } else if (name == "staggered") {
    for (int p = 0; p < n; ++p) s.per_process[p] = {{2 * p, c}};
  } else if (name == "wave") {
    for (int p = 0; p < n; ++p) s.per_process[p] = {{p < n / 2 ? 0 : 7, c}};
  } else if (name == "rolling") {
    for (int p = 0; p < n; ++p) s.per_process[p] = {{p % 5, c}, {3, c}};
  } else if (name == "random") {
    SplitMix64 rng(splitmix64(trial_seed ^ 0x61727276ULL));
    for (int p = 0; p < n; ++p) {
      int r = static_cast<int>(rng.next_u64() % (4u * n + 1u));
      s.per_process[p] = {{r, c}};
    }
  } else {
    throw ConfigError("unknown arrival scenario \"" + name + "\"");
  }
  return s;
}

struct ExperimentConfig {
  ProtocolSpec protocol;
  Capabilities caps;  // cd/gc/kn flags; n is set from the field below
  int n = 2;
  std::string arrivals = "static";  // scenario name, or "suite" for all
  std::string strategy_file;        // explicit strategy overrides arrivals
  int critical_len = 3;
  long long trials = 100;
  std::uint64_t seed = 1;
  int horizon = 0;  // 0 = derived from the protocol parameters
  int threads = 0;  // 0 = hardware concurrency
  std::string out_json;
  std::string out_csv;

  int effective_horizon() const {
    if (horizon > 0) return horizon;
    int unit = 64;
    if (protocol.name == "pi-mod") {
      PIConfig cfg;
      cfg.n = n;
      cfg.epsilon = protocol.epsilon;
      cfg.phase_len = protocol.pi_phase_len;
      cfg.num_phases = protocol.pi_num_phases;
      unit = 2 * cfg.k();
    } else {
      unit = 2 * CISConfig{protocol.epsilon}.rounds() + 48;
    }
    long long h = 64LL * unit + 32LL * n + 256;
    if (protocol.fairness) h *= 6;
    return static_cast<int>(std::min<long long>(h, 4'000'000));
  }

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (n < 1) throw ConfigError("n must be >= 1");
    if (critical_len < 1) throw ConfigError("critical length must be >= 1");
  }
};

/// Compact per-trial result kept for aggregation.
struct TrialStats {
  double makespan = 0.0;
  bool admissible = true;
  bool truncated = false;
  long long visits = 0;
  long long violated_visits = 0;
  long long entries = 0;
  long long unfulfilled = 0;
};

struct ScenarioStats {
  std::string scenario;
  long long trials = 0;
  long long admissible_trials = 0;
  long long truncated_trials = 0;
  long long visits = 0;
  long long violated_visits = 0;
  double violation_rate = 0.0;
  WilsonInterval violation_ci;
  double makespan_mean = 0.0;
  double makespan_median = 0.0;
  double makespan_max = 0.0;
  BootstrapCI makespan_mean_ci;
  BootstrapCI makespan_median_ci;
  long long entries = 0;
  long long unfulfilled = 0;
  std::vector<double> makespans;  // admissible, non-truncated trials
};

struct StatsReport {
  std::string protocol;
  std::string epsilon;
  int n = 0;
  std::uint64_t seed = 0;
  long long trials_per_scenario = 0;
  int horizon = 0;
  std::string caps;
  std::vector<ScenarioStats> rows;
};

namespace detail {

inline TrialStats run_one_trial(const ExperimentConfig& cfg, const ProtocolFactory& factory,
                                const std::string& scenario,
                                const AdversaryStrategy* fixed_strategy,
                                std::uint64_t trial) {
  RunSpec spec;
  spec.factory = factory;
  if (fixed_strategy != nullptr) {
    spec.strategy = *fixed_strategy;
  } else {
    spec.strategy =
        make_scenario(scenario, cfg.n, cfg.critical_len, splitmix64(cfg.seed) ^ trial);
  }
  spec.caps = cfg.caps;
  spec.caps.n = cfg.n;
  spec.seed = cfg.seed;
  spec.trial = trial;
  spec.horizon = cfg.effective_horizon();
  spec.record_trace = false;
  TrialMetrics m = run_trial(spec).metrics;
  TrialStats out;
  out.makespan = static_cast<double>(m.max_gap);
  out.admissible = m.admissible;
  out.truncated = m.truncated;
  out.visits = m.critical_visits;
  out.violated_visits = m.violated_visits;
  out.entries = m.total_entries();
  out.unfulfilled = m.unfulfilled_entries();
  return out;
}

}  // namespace detail

/// Runs `trials` seeded trials per scenario over a worker pool and folds
/// the per-trial metrics into one row per scenario. Results are indexed by
/// trial, so reports do not depend on thread count or completion order.
inline StatsReport run_montecarlo(const ExperimentConfig& cfg) {
  cfg.validate();
  Capabilities caps = cfg.caps;
  caps.n = cfg.n;
  ProtocolFactory factory = build_protocol(cfg.protocol, caps);

  std::vector<std::string> scenarios;
  AdversaryStrategy fixed;
  const AdversaryStrategy* fixed_ptr = nullptr;
  if (!cfg.strategy_file.empty()) {
    fixed = AdversaryStrategy::load(cfg.strategy_file);
    if (fixed.n() != cfg.n) throw ConfigError("strategy file process count differs from --n");
    scenarios = {"file:" + cfg.strategy_file};
    fixed_ptr = &fixed;
  } else if (cfg.arrivals == "suite") {
    scenarios = arrival_suite();
  } else {
    scenarios = {cfg.arrivals};
  }

  StatsReport report;
  report.protocol = cfg.protocol.describe();
  report.epsilon = cfg.protocol.epsilon.str();
  report.n = cfg.n;
  report.seed = cfg.seed;
  report.trials_per_scenario = cfg.trials;
  report.horizon = cfg.effective_horizon();
  report.caps = caps.describe();

  int workers = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;

  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const std::string& scenario = scenarios[si];
    std::vector<TrialStats> results(cfg.trials);
    auto work = [&](long long lo, long long hi) {
      for (long long t = lo; t < hi; ++t) {
        results[t] = detail::run_one_trial(
            cfg, factory, scenario, fixed_ptr,
            static_cast<std::uint64_t>(t) + (static_cast<std::uint64_t>(si) << 40));
      }
    };
    if (workers == 1 || cfg.trials < 2 * workers) {
      work(0, cfg.trials);
    } else {
      std::vector<std::thread> pool;
      const long long chunk = (cfg.trials + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const long long lo = w * chunk;
        const long long hi = std::min<long long>(cfg.trials, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(work, lo, hi);
      }
      for (auto& th : pool) th.join();
    }

    ScenarioStats row;
    row.scenario = scenario;
    row.trials = cfg.trials;
    for (const TrialStats& r : results) {
      if (r.admissible) ++row.admissible_trials;
      if (r.truncated) ++row.truncated_trials;
      row.visits += r.visits;
      row.violated_visits += r.violated_visits;
      row.entries += r.entries;
      row.unfulfilled += r.unfulfilled;
      if (r.admissible && !r.truncated) row.makespans.push_back(r.makespan);
    }
    row.violation_rate = row.visits > 0
                             ? static_cast<double>(row.violated_visits) /
                                   static_cast<double>(row.visits)
                             : 0.0;
    row.violation_ci = wilson_interval(row.violated_visits, row.visits);
    if (!row.makespans.empty()) {
      row.makespan_mean = mean_of(row.makespans);
      row.makespan_median = median_of(row.makespans);
      row.makespan_max = *std::max_element(row.makespans.begin(), row.makespans.end());
      row.makespan_mean_ci = bootstrap_ci(
          row.makespans, [](const std::vector<double>& v) { return mean_of(v); },
          cfg.seed + si);
      row.makespan_median_ci = bootstrap_ci(
          row.makespans, [](const std::vector<double>& v) { return median_of(v); },
          cfg.seed + si + 1);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace macsim
