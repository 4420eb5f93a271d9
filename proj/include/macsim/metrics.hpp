#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "macsim/simulator.hpp"
#include "macsim/trace.hpp"

namespace macsim {

/// Gap analysis of a trace. A gap is a maximal interval of rounds in which
/// some process is in its entry section while no process is critical; the
/// makespan of the run is the longest such gap.
struct MakespanReport {
  int max_gap = 0;
  std::vector<std::pair<int, int>> gaps;  // [start, end)
  bool admissible = true;
};

inline MakespanReport makespan(const ExecutionTrace& trace) {
  MakespanReport rep;
  int gap_start = -1;
  for (int r = 0; r < static_cast<int>(trace.rounds.size()); ++r) {
    int critical = 0;
    bool any_entry = false;
    for (const ProcRound& p : trace.rounds[r].procs) {
      if (p.section == Section::Critical) ++critical;
      if (p.section == Section::Entry) any_entry = true;
    }
    if (critical >= 2) rep.admissible = false;
    const bool gap = any_entry && critical == 0;
    if (gap && gap_start < 0) gap_start = r;
    if (!gap && gap_start >= 0) {
      rep.gaps.emplace_back(gap_start, r);
      gap_start = -1;
    }
  }
  if (gap_start >= 0) rep.gaps.emplace_back(gap_start, static_cast<int>(trace.rounds.size()));
  for (auto [s, e] : rep.gaps) rep.max_gap = std::max(rep.max_gap, e - s);
  return rep;
}

/// Per critical visit: did any other process co-occupy the critical section
/// at some point of the visit.
struct ExclusionReport {
  struct Visit {
    int pid;
    int start;
    int end;  // exclusive
    bool violated;
  };
  std::vector<Visit> visits;
  long long total = 0;
  long long violated = 0;
};

inline ExclusionReport exclusion_report(const ExecutionTrace& trace) {
  ExclusionReport rep;
  const int rounds = static_cast<int>(trace.rounds.size());
  const int n = rounds > 0 ? static_cast<int>(trace.rounds[0].procs.size()) : 0;
  std::vector<int> critical_count(rounds, 0);
  for (int r = 0; r < rounds; ++r)
    for (const ProcRound& p : trace.rounds[r].procs)
      if (p.section == Section::Critical) ++critical_count[r];

  for (int p = 0; p < n; ++p) {
    int start = -1;
    for (int r = 0; r <= rounds; ++r) {
      const bool critical = r < rounds && trace.rounds[r].procs[p].section == Section::Critical;
      if (critical && start < 0) start = r;
      if (!critical && start >= 0) {
        bool violated = false;
        for (int i = start; i < r; ++i)
          if (critical_count[i] >= 2) violated = true;
        rep.visits.push_back({p, start, r, violated});
        start = -1;
      }
    }
  }
  std::sort(rep.visits.begin(), rep.visits.end(),
            [](const auto& a, const auto& b) {
              return a.start != b.start ? a.start < b.start : a.pid < b.pid;
            });
  rep.total = static_cast<long long>(rep.visits.size());
  for (const auto& v : rep.visits)
    if (v.violated) ++rep.violated;
  return rep;
}

/// Pairs each entry run with the round its critical section began, when it
/// did before the trace ended.
struct LockoutReport {
  std::vector<std::vector<EntryOutcome>> per_process;

  long long unfulfilled() const {
    long long u = 0;
    for (const auto& per : per_process)
      for (const EntryOutcome& e : per)
        if (!e.critical_start) ++u;
    return u;
  }
};

inline LockoutReport lockout_report(const ExecutionTrace& trace) {
  LockoutReport rep;
  const int rounds = static_cast<int>(trace.rounds.size());
  const int n = rounds > 0 ? static_cast<int>(trace.rounds[0].procs.size()) : 0;
  rep.per_process.resize(n);
  for (int p = 0; p < n; ++p) {
    for (int r = 0; r < rounds; ++r) {
      Section s = trace.rounds[r].procs[p].section;
      Section prev = r > 0 ? trace.rounds[r - 1].procs[p].section : Section::Remainder;
      if (s == Section::Entry && prev != Section::Entry)
        rep.per_process[p].push_back({r, std::nullopt});
      if (s == Section::Critical && prev == Section::Entry &&
          !rep.per_process[p].empty())
        rep.per_process[p].back().critical_start = r;
    }
  }
  return rep;
}

}  // namespace macsim
