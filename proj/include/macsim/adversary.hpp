#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "macsim/protocol.hpp"

namespace macsim {

/// One adversary-controlled cycle: rounds to stay in the remainder section,
/// then rounds to be kept in the critical section once entry succeeds.
struct DutyPair {
  int remainder_len = 0;  // >= 0; zero means back-to-back with the previous exit
  int critical_len = 1;   // >= 1; a critical visit occupies at least one round
};

/// Per-process sequences of (remainder, critical) lengths. Sequences are
/// finite; after the last pair the process stays in the remainder section
/// forever. Entry and exit durations are never the adversary's to choose.
struct AdversaryStrategy {
  std::vector<std::vector<DutyPair>> per_process;

  int n() const { return static_cast<int>(per_process.size()); }

  void validate() const {
    if (per_process.empty()) throw ConfigError("strategy has no processes");
    for (std::size_t p = 0; p < per_process.size(); ++p) {
      for (const DutyPair& d : per_process[p]) {
        if (d.remainder_len < 0)
          throw ConfigError("negative remainder length for process " + std::to_string(p));
        if (d.critical_len < 1)
          throw ConfigError("critical length must be >= 1 for process " + std::to_string(p));
      }
    }
  }

  /// All processes request entry at round 0 and get one critical visit.
  static AdversaryStrategy all_at_round_zero(int n, int critical_len) {
    AdversaryStrategy s;
    s.per_process.assign(n, {DutyPair{0, critical_len}});
    return s;
  }

  static AdversaryStrategy from_json(const nlohmann::json& j) {
    AdversaryStrategy s;
    if (!j.contains("strategies") || !j["strategies"].is_array())
      throw ConfigError("strategy document needs a \"strategies\" array");
    for (const auto& seq : j["strategies"]) {
      std::vector<DutyPair> pairs;
      for (const auto& pair : seq) {
        if (!pair.is_array() || pair.size() != 2)
          throw ConfigError("each strategy entry must be a [remainder, critical] pair");
        pairs.push_back({pair[0].get<int>(), pair[1].get<int>()});
      }
      s.per_process.push_back(std::move(pairs));
    }
    if (j.contains("n") && j["n"].get<int>() != s.n())
      throw ConfigError("strategy \"n\" does not match the number of sequences");
    s.validate();
    return s;
  }

  static AdversaryStrategy load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open strategy file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("strategy file " + path + ": " + e.what());
    }
    return from_json(j);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json seqs = nlohmann::ordered_json::array();
    for (const auto& seq : per_process) {
      nlohmann::ordered_json sj = nlohmann::ordered_json::array();
      for (const DutyPair& d : seq) sj.push_back({d.remainder_len, d.critical_len});
      seqs.push_back(std::move(sj));
    }
    return {{"n", n()}, {"strategies", std::move(seqs)}};
  }
};

/// Round-by-round driver for the adversary's side of the game: starts entry
/// sections when remainder allotments expire and forces critical -> exit
/// when critical allotments expire.
class SectionDriver {
 public:
  explicit SectionDriver(const AdversaryStrategy& strategy) : strategy_(&strategy) {
    strategy.validate();
    states_.resize(strategy.n());
    for (int p = 0; p < strategy.n(); ++p) {
      auto& st = states_[p];
      if (strategy.per_process[p].empty()) {
        st.remainder_left = kForever;
      } else {
        st.remainder_left = strategy.per_process[p][0].remainder_len;
      }
    }
  }

  /// In Remainder: true when the process must start its entry section now.
  bool entry_due(int p) const { return states_[p].remainder_left == 0; }

  void consume_remainder_round(int p) {
    if (states_[p].remainder_left != kForever) --states_[p].remainder_left;
  }

  /// On Entry -> Critical: how many rounds the process stays critical.
  void arm_critical(int p) {
    states_[p].critical_left = strategy_->per_process[p][states_[p].pair].critical_len;
  }

  bool critical_expired(int p) const { return states_[p].critical_left == 0; }

  void consume_critical_round(int p) { --states_[p].critical_left; }

  /// On Exit -> Remainder: advance to the next pair (or remainder forever).
  void complete_cycle(int p) {
    auto& st = states_[p];
    ++st.pair;
    if (st.pair >= static_cast<int>(strategy_->per_process[p].size())) {
      st.remainder_left = kForever;
    } else {
      st.remainder_left = strategy_->per_process[p][st.pair].remainder_len;
    }
  }

  /// True when the process has no future entry requests.
  bool exhausted(int p) const { return states_[p].remainder_left == kForever; }

 private:
  static constexpr long long kForever = std::numeric_limits<long long>::max();

  struct State {
    int pair = 0;
    long long remainder_left = 0;
    int critical_left = 0;
  };

  const AdversaryStrategy* strategy_;
  std::vector<State> states_;
};

inline SectionDriver schedule_sections(const AdversaryStrategy& strategy) {
  return SectionDriver(strategy);
}

}  // namespace macsim
