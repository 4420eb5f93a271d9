#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "macsim/adversary.hpp"
#include "macsim/channel.hpp"
#include "macsim/protocol.hpp"
#include "macsim/rng.hpp"
#include "macsim/trace.hpp"

namespace macsim {

struct RunSpec {
  ProtocolFactory factory;
  AdversaryStrategy strategy;
  Capabilities caps;
  std::uint64_t seed = 0;
  int horizon = 1'000'000;
  std::uint64_t trial = 0;   // folded into the per-process stream seeds
  bool record_trace = true;  // metrics are accumulated either way
  bool stop_on_first_critical = false;  // end the trial once anyone is critical
  std::string protocol_name;
  std::string strategy_name;
};

/// Per-entry-run outcome: when the run reached the critical section, if ever.
struct EntryOutcome {
  int entry_start = 0;
  std::optional<int> critical_start;  // empty = unfulfilled within the horizon
};

/// Metrics accumulated round by round while a trial runs. Equal, by
/// construction and by test, to what the trace-based reports compute.
struct TrialMetrics {
  int rounds = 0;
  bool truncated = false;
  bool admissible = true;

  int max_gap = 0;
  std::vector<std::pair<int, int>> gaps;  // [start, end) with some entry, no critical

  long long critical_visits = 0;
  long long violated_visits = 0;

  std::vector<std::vector<EntryOutcome>> entries_per_process;

  long long unfulfilled_entries() const {
    long long u = 0;
    for (const auto& per : entries_per_process)
      for (const EntryOutcome& e : per)
        if (!e.critical_start) ++u;
    return u;
  }
  long long total_entries() const {
    long long t = 0;
    for (const auto& per : entries_per_process) t += per.size();
    return t;
  }
};

struct RunResult {
  ExecutionTrace trace;  // empty when record_trace was off
  TrialMetrics metrics;
};

namespace detail {

class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(int n) : visit_open_(n, false), visit_violated_(n, false) {
    metrics_.entries_per_process.resize(n);
  }

  void observe_round(int round, const std::vector<Section>& sections,
                     const std::vector<Section>& prev_sections) {
    const int n = static_cast<int>(sections.size());
    int critical = 0;
    bool any_entry = false;
    for (int p = 0; p < n; ++p) {
      if (sections[p] == Section::Critical) ++critical;
      if (sections[p] == Section::Entry) any_entry = true;
    }
    if (critical >= 2) metrics_.admissible = false;

    for (int p = 0; p < n; ++p) {
      const bool was_entry = round > 0 && prev_sections[p] == Section::Entry;
      const bool was_critical = round > 0 && prev_sections[p] == Section::Critical;
      if (sections[p] == Section::Entry && !was_entry) {
        metrics_.entries_per_process[p].push_back({round, std::nullopt});
      }
      if (sections[p] == Section::Critical) {
        if (!was_critical) {
          if (was_entry && !metrics_.entries_per_process[p].empty())
            metrics_.entries_per_process[p].back().critical_start = round;
          visit_open_[p] = true;
          visit_violated_[p] = false;
        }
        if (critical >= 2) visit_violated_[p] = true;
      } else if (was_critical) {
        close_visit(p);
      }
    }

    const bool gap_now = any_entry && critical == 0;
    if (gap_now && gap_start_ < 0) gap_start_ = round;
    if (!gap_now && gap_start_ >= 0) close_gap(round);
    metrics_.rounds = round + 1;
  }

  TrialMetrics finish(bool truncated) {
    if (gap_start_ >= 0) close_gap(metrics_.rounds);
    for (std::size_t p = 0; p < visit_open_.size(); ++p)
      if (visit_open_[p]) close_visit(static_cast<int>(p));
    metrics_.truncated = truncated;
    return std::move(metrics_);
  }

 private:
  void close_gap(int end) {
    metrics_.gaps.emplace_back(gap_start_, end);
    metrics_.max_gap = std::max(metrics_.max_gap, end - gap_start_);
    gap_start_ = -1;
  }

  void close_visit(int p) {
    ++metrics_.critical_visits;
    if (visit_violated_[p]) ++metrics_.violated_visits;
    visit_open_[p] = false;
  }

  TrialMetrics metrics_;
  int gap_start_ = -1;
  std::vector<bool> visit_open_;
  std::vector<bool> visit_violated_;
};

}  // namespace detail

/// Runs one trial: queries the adversary driver and the protocols, resolves
/// the channel, distributes capability-masked feedback, and records the
/// trace and metrics. Deterministic in (factory, strategy, caps, seed, trial).
inline RunResult run_trial(const RunSpec& spec) {
  const int n = spec.strategy.n();
  if (n < 1) throw ConfigError("need at least one process");
  Capabilities caps = spec.caps;
  caps.n = n;

  SectionDriver driver = schedule_sections(spec.strategy);

  std::vector<std::unique_ptr<Protocol>> protocols;
  std::vector<SplitMix64> rngs;
  protocols.reserve(n);
  rngs.reserve(n);
  for (int p = 0; p < n; ++p) {
    protocols.push_back(spec.factory(p));
    rngs.emplace_back(stream_seed(spec.seed, spec.trial, p));
  }

  std::vector<Section> sections(n, Section::Remainder);
  std::vector<Section> prev_sections(n, Section::Remainder);
  std::vector<int> local_round(n, 0);
  std::vector<Feedback> prev_fb(n, Feedback::none());
  std::vector<ChannelAction> actions(n);

  detail::MetricsAccumulator acc(n);

  ExecutionTrace trace;
  trace.n = n;
  trace.seed = spec.seed;
  trace.caps = caps;
  trace.protocol = spec.protocol_name;
  trace.strategy = spec.strategy_name;
  trace.horizon = spec.horizon;
  if (spec.record_trace) trace.rounds.reserve(std::min(spec.horizon, 1 << 20));

  std::vector<AdversaryEvent> events;

  for (int t = 0; t < spec.horizon; ++t) {
    // nothing can happen once every process rests with no entries pending
    bool all_done = true;
    for (int p = 0; p < n && all_done; ++p)
      all_done = sections[p] == Section::Remainder && driver.exhausted(p);
    if (all_done) break;

    events.clear();
    for (int p = 0; p < n; ++p) {
      // Settle this process's section for round t, chaining zero-round
      // sections at the boundary, then obtain its action.
      for (int hop = 0;; ++hop) {
        if (hop > 4)
          throw ProtocolViolationError(t, p, "section transitions do not settle");
        if (sections[p] == Section::Remainder) {
          if (driver.entry_due(p)) {
            sections[p] = Section::Entry;
            local_round[p] = 0;
            protocols[p]->begin_entry();
            events.push_back({AdversaryEventKind::EntryStart, p});
            continue;
          }
          driver.consume_remainder_round(p);
          actions[p] = ChannelAction::idle();
          break;
        }
        if (sections[p] == Section::Critical) {
          if (driver.critical_expired(p)) {
            sections[p] = Section::Exit;
            local_round[p] = 0;
            protocols[p]->begin_exit();
            events.push_back({AdversaryEventKind::ForcedExit, p});
            continue;
          }
          driver.consume_critical_round(p);
          actions[p] = critical_decision(p).action;
          break;
        }
        StepContext ctx;
        ctx.pid = p;
        ctx.local_round = local_round[p];
        ctx.prev = prev_fb[p];
        ctx.clock = caps.gc ? std::optional<int>(t) : std::nullopt;
        ctx.caps = &caps;
        ctx.rng = &rngs[p];
        if (sections[p] == Section::Entry) {
          ProtocolDecision dec = protocols[p]->entry_step(ctx);
          if (dec.transition) {
            if (*dec.transition != Section::Critical)
              throw ProtocolViolationError(t, p, "entry may only move to critical");
            if (local_round[p] == 0)
              throw ProtocolViolationError(t, p, "entry section must last at least one round");
            sections[p] = Section::Critical;
            driver.arm_critical(p);
            continue;
          }
          if (dec.action.kind == ActionKind::Idle)
            throw ProtocolViolationError(t, p, "entry protocol returned idle");
          if (dec.action.transmits() && dec.action.message.label == MessageLabel::Critical)
            throw ProtocolViolationError(t, p, "critical label outside the critical section");
          actions[p] = dec.action;
          ++local_round[p];
          break;
        }
        // Exit
        ProtocolDecision dec = protocols[p]->exit_step(ctx);
        if (dec.transition) {
          if (*dec.transition != Section::Remainder)
            throw ProtocolViolationError(t, p, "exit may only move to remainder");
          sections[p] = Section::Remainder;
          driver.complete_cycle(p);
          continue;
        }
        if (dec.action.kind == ActionKind::Idle)
          throw ProtocolViolationError(t, p, "exit protocol returned idle");
        if (dec.action.transmits() && dec.action.message.label == MessageLabel::Critical)
          throw ProtocolViolationError(t, p, "critical label outside the critical section");
        actions[p] = dec.action;
        ++local_round[p];
        break;
      }
    }

    ChannelOutcome outcome = resolve_round(actions);
    for (int p = 0; p < n; ++p) {
      prev_fb[p] = actions[p].kind == ActionKind::Idle
                       ? Feedback::none()
                       : feedback_for(outcome, actions[p].transmits(), caps);
    }

    acc.observe_round(t, sections, prev_sections);

    if (spec.record_trace) {
      RoundRecord rec;
      rec.outcome = outcome;
      rec.procs.resize(n);
      for (int p = 0; p < n; ++p) {
        rec.procs[p].section = sections[p];
        rec.procs[p].action = actions[p];
        rec.procs[p].feedback = prev_fb[p];
        if (auto loss = protocols[p]->loss_counter(); loss && sections[p] == Section::Entry)
          rec.procs[p].loss = *loss;
      }
      rec.events = events;
      trace.rounds.push_back(std::move(rec));
    }

    prev_sections = sections;

    if (spec.stop_on_first_critical) {
      bool any = false;
      for (int p = 0; p < n; ++p)
        if (sections[p] == Section::Critical) any = true;
      if (any) break;
    }
  }

  bool truncated = false;
  for (int p = 0; p < n; ++p)
    if (sections[p] != Section::Remainder || !driver.exhausted(p)) truncated = true;

  RunResult result;
  result.metrics = acc.finish(truncated);
  trace.truncated = truncated;
  if (spec.record_trace) result.trace = std::move(trace);
  return result;
}

/// Trace-returning form used by the CLI and most tests.
inline ExecutionTrace run(const ProtocolFactory& factory, const AdversaryStrategy& strategy,
                          const Capabilities& caps, std::uint64_t seed, int horizon) {
  RunSpec spec;
  spec.factory = factory;
  spec.strategy = strategy;
  spec.caps = caps;
  spec.seed = seed;
  spec.horizon = horizon;
  return run_trial(spec).trace;
}

}  // namespace macsim
