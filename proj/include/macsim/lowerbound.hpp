#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "macsim/metrics.hpp"
#include "macsim/simulator.hpp"
#include "macsim/validate.hpp"

namespace macsim {

/// Deterministic transmit/listen sequence for one process. Positions are
/// 1-based to match the construction window: position i says what the
/// process does in round i of its section run (trace round i-1); after the
/// last position the process enters the critical section.
struct TransmissionSchedule {
  std::vector<bool> bits;  // true = transmit

  int length() const { return static_cast<int>(bits.size()); }
  bool transmits_at(int i) const {  // 1-based; out of range = listening/absent
    return i >= 1 && i <= length() && bits[i - 1];
  }

  static TransmissionSchedule from_string(const std::string& s) {
    TransmissionSchedule sched;
    for (char c : s) {
      if (c != '0' && c != '1')
        throw ConfigError("schedule strings may contain only '0' and '1'");
      sched.bits.push_back(c == '1');
    }
    if (sched.bits.empty()) throw ConfigError("schedules must be non-empty");
    return sched;
  }

  std::string str() const {
    std::string s;
    for (bool b : bits) s += b ? '1' : '0';
    return s;
  }
};

inline std::vector<TransmissionSchedule> load_schedules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schedule file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("schedule file " + path + ": " + e.what());
  }
  if (!j.contains("schedules") || !j["schedules"].is_array())
    throw ConfigError("schedule document needs a \"schedules\" array");
  std::vector<TransmissionSchedule> out;
  for (const auto& s : j["schedules"])
    out.push_back(TransmissionSchedule::from_string(s.get<std::string>()));
  return out;
}

/// Result of the fixed-point removal process, with its three checked
/// postconditions: at least two survivors, no round of the window with a
/// unique transmitter among them, and a tie for the shortest schedule.
struct FixedPointResult {
  std::vector<int> p_star;
  int iterations = 0;     // rule applications until both rules are inert
  int shortest_len = 0;   // minimum schedule length within p_star
  bool at_least_two = false;
  bool no_unique_transmitter = false;
  bool shortest_tied = false;

  bool all_checks() const { return at_least_two && no_unique_transmitter && shortest_tied; }
};

namespace detail {

// Removal rules over the window [1, n/2-1]. The odd rule removes every
// member that would be the unique transmitter at some window round among
// the current members; the even rule removes the member with the strictly
// unique shortest schedule, if any.
inline bool apply_unique_transmitter_rule(const std::vector<TransmissionSchedule>& sched,
                                          std::vector<bool>& in, int window_end) {
  std::vector<int> removed;
  for (std::size_t p = 0; p < sched.size(); ++p) {
    if (!in[p]) continue;
    bool unique_somewhere = false;
    for (int i = 1; i <= window_end && !unique_somewhere; ++i) {
      if (!sched[p].transmits_at(i)) continue;
      bool other = false;
      for (std::size_t q = 0; q < sched.size(); ++q) {
        if (q == p || !in[q]) continue;
        if (sched[q].transmits_at(i)) {
          other = true;
          break;
        }
      }
      if (!other) unique_somewhere = true;
    }
    if (unique_somewhere) removed.push_back(static_cast<int>(p));
  }
  for (int p : removed) in[p] = false;
  return !removed.empty();
}

inline bool apply_unique_shortest_rule(const std::vector<TransmissionSchedule>& sched,
                                       std::vector<bool>& in, int window_end) {
  int best = -1;
  int best_len = window_end + 1;
  bool tie = false;
  for (std::size_t p = 0; p < sched.size(); ++p) {
    if (!in[p]) continue;
    int len = sched[p].length();
    if (len < best_len) {
      best_len = len;
      best = static_cast<int>(p);
      tie = false;
    } else if (len == best_len) {
      tie = true;
    }
  }
  if (best >= 0 && !tie && best_len <= window_end) {
    in[best] = false;
    return true;
  }
  return false;
}

}  // namespace detail

/// Alternates the two removal rules from the full process set until neither
/// changes anything, then evaluates the three postconditions on the
/// surviving set.
inline FixedPointResult lowerbound_construct(const std::vector<TransmissionSchedule>& schedules,
                                             int n) {
  if (n < 4 || n % 2 != 0)
    throw ConfigError("construction needs an even process count n >= 4");
  if (static_cast<int>(schedules.size()) != n)
    throw ConfigError("need one schedule per process");
  const int window_end = n / 2 - 1;
  for (const TransmissionSchedule& s : schedules) {
    if (s.length() < 1) throw ConfigError("schedules must be non-empty");
  }

  std::vector<bool> in(n, true);
  FixedPointResult res;
  // Removals are bounded by n-2, so the alternation settles within
  // 2(n-2)+1 rule applications; anything longer is a bug.
  const int cap = 2 * (n - 2) + 1;
  bool odd_turn = true;
  int inert_in_a_row = 0;
  while (inert_in_a_row < 2) {
    bool changed = odd_turn
                       ? detail::apply_unique_transmitter_rule(schedules, in, window_end)
                       : detail::apply_unique_shortest_rule(schedules, in, window_end);
    odd_turn = !odd_turn;
    ++res.iterations;
    inert_in_a_row = changed ? 0 : inert_in_a_row + 1;
    if (res.iterations > cap + 2)
      throw std::logic_error("fixed-point construction failed to settle");
  }

  for (int p = 0; p < n; ++p)
    if (in[p]) res.p_star.push_back(p);

  res.at_least_two = res.p_star.size() >= 2;
  res.no_unique_transmitter = true;
  for (int i = 1; i <= window_end; ++i) {
    int transmitters = 0;
    for (int p : res.p_star)
      if (schedules[p].transmits_at(i)) ++transmitters;
    if (transmitters == 1) res.no_unique_transmitter = false;
  }
  res.shortest_len = res.p_star.empty() ? 0 : schedules[res.p_star.front()].length();
  for (int p : res.p_star) res.shortest_len = std::min(res.shortest_len, schedules[p].length());
  int at_min = 0;
  for (int p : res.p_star)
    if (schedules[p].length() == res.shortest_len) ++at_min;
  res.shortest_tied = at_min >= 2;
  return res;
}

/// Entry protocol that follows a fixed transmission schedule and enters the
/// critical section when the schedule ends. Used to replay the constructed
/// execution; transmissions are ordinary protocol messages.
class ScheduleProtocol final : public Protocol {
 public:
  ScheduleProtocol(int pid, TransmissionSchedule schedule)
      : pid_(pid), schedule_(std::move(schedule)) {}

  ProtocolDecision entry_step(const StepContext& ctx) override {
    if (ctx.local_round >= schedule_.length())
      return ProtocolDecision::move_to(Section::Critical);
    if (schedule_.transmits_at(ctx.local_round + 1))
      return ProtocolDecision::act(
          ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
    return ProtocolDecision::act(ChannelAction::listen());
  }

 private:
  int pid_;
  TransmissionSchedule schedule_;
};

/// Records the transmit/listen sequence a protocol realizes when it hears
/// nothing but noise, up to the round it enters the critical section. This
/// is how randomized protocols are turned into the deterministic schedules
/// the construction consumes: fix a seed, keep the realized coin flips.
inline TransmissionSchedule extract_schedule(Protocol& protocol, const Capabilities& caps,
                                             RandomSource& rng, int max_rounds) {
  TransmissionSchedule sched;
  protocol.begin_entry();
  for (int t = 0; t < max_rounds; ++t) {
    StepContext ctx;
    ctx.pid = 0;
    ctx.local_round = t;
    ctx.prev = t == 0 ? Feedback::none() : Feedback{FeedbackKind::Noise, {}};
    ctx.caps = &caps;
    ctx.rng = &rng;
    ProtocolDecision dec = protocol.entry_step(ctx);
    if (dec.transition) return sched;
    sched.bits.push_back(dec.action.transmits());
  }
  throw ConfigError("protocol did not enter the critical section within " +
                    std::to_string(max_rounds) + " rounds");
}

/// Replays the adversarial execution: every member of p_star starts its
/// entry section in the first round and follows its schedule; everyone else
/// is delayed past the horizon. Run without collision detection, so the
/// surviving listeners hear only noise. The resulting trace carries the
/// exclusion violation the construction promises.
inline ExecutionTrace replay_violation(const std::vector<TransmissionSchedule>& schedules,
                                       const std::vector<int>& p_star) {
  if (p_star.size() < 2)
    throw ConfigError("replay needs at least two surviving processes");
  const int n = static_cast<int>(schedules.size());
  int shortest = schedules[p_star.front()].length();
  for (int p : p_star) shortest = std::min(shortest, schedules[p].length());
  const int horizon = shortest + 2;

  AdversaryStrategy strategy;
  strategy.per_process.resize(n);
  std::vector<bool> in_star(n, false);
  for (int p : p_star) in_star[p] = true;
  for (int p = 0; p < n; ++p) {
    // delayed processes never get an entry request inside the horizon
    strategy.per_process[p] = {DutyPair{in_star[p] ? 0 : horizon + 1, 1}};
  }

  RunSpec spec;
  spec.factory = [&](int pid) -> std::unique_ptr<Protocol> {
    return std::make_unique<ScheduleProtocol>(pid, schedules[pid]);
  };
  spec.strategy = strategy;
  spec.caps.cd = false;
  spec.caps.gc = false;
  spec.caps.kn = false;
  spec.seed = 0;
  spec.horizon = horizon;
  spec.protocol_name = "fixed-schedule";
  spec.strategy_name = "lowerbound-replay";
  return run_trial(spec).trace;
}

}  // namespace macsim
