#pragma once

#include <string>
#include <vector>

#include "macsim/trace.hpp"

namespace macsim {

enum class ViolationKind : std::uint8_t {
  RemainderTransmission,
  MissingCriticalMessage,
  IllegalTransition,
  ExclusionViolation,
};

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::RemainderTransmission: return "remainder_transmission";
    case ViolationKind::MissingCriticalMessage: return "missing_critical_message";
    case ViolationKind::IllegalTransition: return "illegal_transition";
    case ViolationKind::ExclusionViolation: return "exclusion_violation";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  int round;
  int pid;  // -1 for round-level violations (exclusion)
  std::string detail;
};

/// True when a process may occupy section `to` in the round after `from`.
/// Sections may be passed through in zero rounds (an empty exit, a zero
/// remainder allotment) as long as cycle order is kept; entry and critical
/// sections always occupy at least one round.
inline bool legal_transition(Section from, Section to) {
  if (from == to) return true;
  switch (from) {
    case Section::Remainder: return to == Section::Entry;
    case Section::Entry: return to == Section::Critical;
    case Section::Critical:
      // via a zero-round exit, possibly also a zero-round remainder
      return to == Section::Exit || to == Section::Remainder || to == Section::Entry;
    case Section::Exit:
      return to == Section::Remainder || to == Section::Entry;
  }
  return false;
}

/// Scans a complete trace for model violations: remainder-section
/// transmissions, critical rounds without the critical message, section
/// changes off the cycle, and rounds with two or more critical occupants.
inline std::vector<Violation> validate_trace(const ExecutionTrace& trace) {
  std::vector<Violation> out;
  const int rounds = static_cast<int>(trace.rounds.size());
  for (int r = 0; r < rounds; ++r) {
    const RoundRecord& rec = trace.rounds[r];
    int in_critical = 0;
    for (int p = 0; p < static_cast<int>(rec.procs.size()); ++p) {
      const ProcRound& pr = rec.procs[p];
      if (pr.section == Section::Critical) ++in_critical;
      if (pr.section == Section::Remainder && pr.action.kind == ActionKind::Transmit) {
        out.push_back({ViolationKind::RemainderTransmission, r, p,
                       "remainder-section process transmitted"});
      }
      if (pr.section == Section::Critical &&
          !(pr.action.kind == ActionKind::Transmit &&
            pr.action.message.label == MessageLabel::Critical)) {
        out.push_back({ViolationKind::MissingCriticalMessage, r, p,
                       "critical-section round without a critical-labelled transmission"});
      }
      if (r > 0) {
        Section prev = trace.rounds[r - 1].procs[p].section;
        if (!legal_transition(prev, pr.section)) {
          out.push_back({ViolationKind::IllegalTransition, r, p,
                         std::string(to_string(prev)) + " -> " + to_string(pr.section)});
        }
      }
    }
    if (in_critical >= 2) {
      out.push_back({ViolationKind::ExclusionViolation, r, -1,
                     std::to_string(in_critical) + " processes in the critical section"});
    }
  }
  return out;
}

inline int count_violations(const std::vector<Violation>& vs, ViolationKind k) {
  int c = 0;
  for (const Violation& v : vs)
    if (v.kind == k) ++c;
  return c;
}

}  // namespace macsim
