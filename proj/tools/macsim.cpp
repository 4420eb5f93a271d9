// Command-line front end: single simulations, Monte Carlo batches, the
// adversarial lower-bound construction, and trace validation.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "macsim/lowerbound.hpp"
#include "macsim/metrics.hpp"
#include "macsim/montecarlo.hpp"
#include "macsim/report.hpp"
#include "macsim/validate.hpp"

namespace {

using namespace macsim;

struct CliOptions {
  CliOptions() { cfg.n = 0; }  // --n (or a config file) must supply it

  ExperimentConfig cfg;
  std::string epsilon_text = "1/16";
  std::string config_file;
  std::string trace_out;
  bool arrivals_static = false;
  bool no_kn = false;
};

void load_config_file(CLI::App* cmd, CliOptions& o) {
  if (o.config_file.empty()) return;
  std::ifstream in(o.config_file);
  if (!in) throw ConfigError("cannot open config file: " + o.config_file);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + o.config_file + ": " + e.what());
  }
  auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
  if (j.contains("protocol") && !given("--protocol"))
    o.cfg.protocol.name = j["protocol"].get<std::string>();
  if (j.contains("epsilon") && !given("--epsilon"))
    o.epsilon_text = j["epsilon"].get<std::string>();
  if (j.contains("n") && !given("--n")) o.cfg.n = j["n"].get<int>();
  if (j.contains("cd") && !given("--cd")) o.cfg.caps.cd = j["cd"].get<bool>();
  if (j.contains("gc") && !given("--gc")) o.cfg.caps.gc = j["gc"].get<bool>();
  if (j.contains("kn") && !given("--no-kn")) o.no_kn = !j["kn"].get<bool>();
  if (j.contains("fairness") && !given("--fairness"))
    o.cfg.protocol.fairness = j["fairness"].get<bool>();
  if (j.contains("arrivals") && !given("--arrivals"))
    o.cfg.arrivals = j["arrivals"].get<std::string>();
  if (j.contains("strategy") && !given("--strategy"))
    o.cfg.strategy_file = j["strategy"].get<std::string>();
  if (j.contains("critical_len") && !given("--critical-len"))
    o.cfg.critical_len = j["critical_len"].get<int>();
  if (j.contains("trials") && !given("--trials")) o.cfg.trials = j["trials"].get<long long>();
  if (j.contains("seed") && !given("--seed")) o.cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("horizon") && !given("--horizon")) o.cfg.horizon = j["horizon"].get<int>();
  if (j.contains("threads") && !given("--threads")) o.cfg.threads = j["threads"].get<int>();
  if (j.contains("out_json") && !given("--json")) o.cfg.out_json = j["out_json"].get<std::string>();
  if (j.contains("out_csv") && !given("--csv")) o.cfg.out_csv = j["out_csv"].get<std::string>();
}

void finalize(CliOptions& o) {
  if (o.cfg.n < 1) throw ConfigError("--n is required (number of processes)");
  o.cfg.protocol.epsilon = Fraction::parse(o.epsilon_text);
  o.cfg.caps.kn = !o.no_kn;
  o.cfg.caps.n = o.cfg.n;
  if (o.arrivals_static) o.cfg.arrivals = "static";
}

void add_common(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--protocol", o.cfg.protocol.name,
                  "entry protocol: pi-mod, cis-willard, cis-willard-dyn");
  cmd->add_option("--n", o.cfg.n, "number of processes");
  cmd->add_option("--epsilon", o.epsilon_text, "error budget as a fraction, e.g. 1/16");
  cmd->add_flag("--cd", o.cfg.caps.cd, "collision detection available");
  cmd->add_flag("--gc", o.cfg.caps.gc, "global clock available");
  cmd->add_flag("--no-kn", o.no_kn, "hide the process count from protocols");
  cmd->add_flag("--fairness", o.cfg.protocol.fairness,
                "wrap the protocol with the no-lockout transformation (needs --cd)");
  cmd->add_option("--arrivals", o.cfg.arrivals,
                  "arrival scenario: static, solo, staggered, wave, rolling, random, suite");
  cmd->add_flag("--static", o.arrivals_static, "all processes request entry at round 0");
  cmd->add_option("--strategy", o.cfg.strategy_file, "adversary strategy JSON file");
  cmd->add_option("--critical-len", o.cfg.critical_len, "critical section length in rounds");
  cmd->add_option("--seed", o.cfg.seed, "root random seed")->envname("MACSIM_SEED");
  cmd->add_option("--horizon", o.cfg.horizon, "round budget per trial (0 = auto)");
  cmd->add_option("--config", o.config_file, "JSON config file; flags override its fields");
}

int print_violation_summary(const std::vector<Violation>& vs) {
  std::printf("violations: remainder_transmission=%d missing_critical_message=%d "
              "illegal_transition=%d exclusion_violation=%d\n",
              count_violations(vs, ViolationKind::RemainderTransmission),
              count_violations(vs, ViolationKind::MissingCriticalMessage),
              count_violations(vs, ViolationKind::IllegalTransition),
              count_violations(vs, ViolationKind::ExclusionViolation));
  int shown = 0;
  for (const Violation& v : vs) {
    if (++shown > 10) {
      std::printf("  ... %zu more\n", vs.size() - 10);
      break;
    }
    std::printf("  [%s] round %d process %d: %s\n", to_string(v.kind), v.round, v.pid,
                v.detail.c_str());
  }
  return static_cast<int>(vs.size());
}

int cmd_simulate(CliOptions& o) {
  finalize(o);
  o.cfg.validate();
  Capabilities caps = o.cfg.caps;
  ProtocolFactory factory = build_protocol(o.cfg.protocol, caps);

  RunSpec spec;
  spec.factory = factory;
  if (!o.cfg.strategy_file.empty()) {
    spec.strategy = AdversaryStrategy::load(o.cfg.strategy_file);
    if (spec.strategy.n() != o.cfg.n)
      throw ConfigError("strategy file process count differs from --n");
    spec.strategy_name = o.cfg.strategy_file;
  } else {
    spec.strategy = make_scenario(o.cfg.arrivals == "suite" ? "static" : o.cfg.arrivals,
                                  o.cfg.n, o.cfg.critical_len, splitmix64(o.cfg.seed));
    spec.strategy_name = o.cfg.arrivals == "suite" ? "static" : o.cfg.arrivals;
  }
  spec.caps = caps;
  spec.seed = o.cfg.seed;
  spec.horizon = o.cfg.effective_horizon();
  spec.protocol_name = o.cfg.protocol.describe();

  ExecutionTrace trace = run_trial(spec).trace;
  MakespanReport mk = makespan(trace);
  ExclusionReport ex = exclusion_report(trace);
  std::vector<Violation> vs = validate_trace(trace);

  std::printf("protocol: %s  caps: %s  n: %d  seed: %llu\n", spec.protocol_name.c_str(),
              caps.describe().c_str(), o.cfg.n,
              static_cast<unsigned long long>(o.cfg.seed));
  std::printf("rounds: %zu  truncated: %s\n", trace.rounds.size(),
              trace.truncated ? "true" : "false");
  std::printf("makespan: %d  gaps: %zu\n", mk.max_gap, mk.gaps.size());
  std::printf("critical visits: %lld  violated: %lld\n", ex.total, ex.violated);
  std::printf("admissible: %s\n", mk.admissible ? "true" : "false");
  print_violation_summary(vs);
  if (!o.trace_out.empty()) {
    write_jsonl_file(trace, o.trace_out);
    std::printf("trace written to %s\n", o.trace_out.c_str());
  }
  return 0;
}

int cmd_mc(CliOptions& o) {
  finalize(o);
  StatsReport report = run_montecarlo(o.cfg);
  std::printf("protocol: %s  n: %d  trials/scenario: %lld  horizon: %d\n",
              report.protocol.c_str(), report.n, report.trials_per_scenario,
              report.horizon);
  for (const ScenarioStats& s : report.rows) {
    std::printf(
        "  %-12s admissible %lld/%lld  visits %lld (violated %lld, rate %.3g)  "
        "makespan mean %.2f median %.1f max %.0f  unfulfilled %lld\n",
        s.scenario.c_str(), s.admissible_trials, s.trials, s.visits, s.violated_visits,
        s.violation_rate, s.makespan_mean, s.makespan_median, s.makespan_max,
        s.unfulfilled);
  }
  write_report_files(report, o.cfg.out_json, o.cfg.out_csv);
  if (!o.cfg.out_json.empty()) std::printf("report written to %s\n", o.cfg.out_json.c_str());
  if (!o.cfg.out_csv.empty()) std::printf("csv written to %s\n", o.cfg.out_csv.c_str());
  return 0;
}

int cmd_adversary(const std::string& schedules_path, const std::string& trace_out) {
  std::vector<TransmissionSchedule> schedules = load_schedules(schedules_path);
  const int n = static_cast<int>(schedules.size());
  FixedPointResult fp = lowerbound_construct(schedules, n);

  std::string members;
  for (int p : fp.p_star) members += (members.empty() ? "" : ",") + std::to_string(p);
  std::printf("n: %d  window: [1,%d]\n", n, n / 2 - 1);
  std::printf("p_star: {%s}  iterations: %d  shortest: %d\n", members.c_str(),
              fp.iterations, fp.shortest_len);
  std::printf("check |p_star| >= 2: %s\n", fp.at_least_two ? "pass" : "FAIL");
  std::printf("check no unique transmitter in window: %s\n",
              fp.no_unique_transmitter ? "pass" : "FAIL");
  std::printf("check shortest schedule tied: %s\n", fp.shortest_tied ? "pass" : "FAIL");
  if (!fp.all_checks()) {
    std::printf("construction postconditions unmet\n");
    return 2;
  }

  ExecutionTrace trace = replay_violation(schedules, fp.p_star);
  std::vector<Violation> vs = validate_trace(trace);
  const int exclusions = count_violations(vs, ViolationKind::ExclusionViolation);
  std::printf("replay rounds: %zu  exclusion violations: %d\n", trace.rounds.size(),
              exclusions);
  if (!trace_out.empty()) {
    write_jsonl_file(trace, trace_out);
    std::printf("violation trace written to %s\n", trace_out.c_str());
  }
  if (exclusions < 1) {
    std::printf("expected an exclusion violation in the replay\n");
    return 2;
  }
  return 0;
}

int cmd_validate(const std::string& trace_path) {
  ExecutionTrace trace = read_jsonl_file(trace_path);
  std::printf("trace: %s  n: %d  rounds: %zu  truncated: %s\n", trace_path.c_str(),
              trace.n, trace.rounds.size(), trace.truncated ? "true" : "false");
  std::vector<Violation> vs = validate_trace(trace);
  int total = print_violation_summary(vs);
  return total == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiple-access-channel mutual exclusion simulator"};
  app.require_subcommand(1);

  CliOptions sim_opts;
  CLI::App* sim = app.add_subcommand("simulate", "run one trial and report its metrics");
  add_common(sim, sim_opts);
  sim->add_option("--trace", sim_opts.trace_out, "write the trace as JSON lines");

  CliOptions mc_opts;
  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo estimation over many trials");
  add_common(mc, mc_opts);
  mc->add_option("--trials", mc_opts.cfg.trials, "trials per scenario");
  mc->add_option("--threads", mc_opts.cfg.threads, "worker threads (0 = hardware)");
  mc->add_option("--json", mc_opts.cfg.out_json, "write the report as JSON");
  mc->add_option("--csv", mc_opts.cfg.out_csv, "write the report as CSV");

  std::string schedules_path, adv_trace_out;
  CLI::App* adv = app.add_subcommand(
      "adversary", "run the fixed-point construction and replay the violating execution");
  adv->add_option("--schedules", schedules_path, "JSON file with binary schedules")
      ->required();
  adv->add_option("--trace", adv_trace_out, "write the violating trace");

  std::string validate_path;
  CLI::App* val = app.add_subcommand("validate", "check a trace file for model violations");
  val->add_option("--trace", validate_path, "trace file (JSON lines)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      load_config_file(sim, sim_opts);
      return cmd_simulate(sim_opts);
    }
    if (mc->parsed()) {
      load_config_file(mc, mc_opts);
      return cmd_mc(mc_opts);
    }
    if (adv->parsed()) return cmd_adversary(schedules_path, adv_trace_out);
    if (val->parsed()) return cmd_validate(validate_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 64;
  } catch (const ProtocolViolationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 70;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
