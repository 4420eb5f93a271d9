#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "json.hpp"
#include "macsim/montecarlo.hpp"

namespace macsim {

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace detail

inline nlohmann::ordered_json report_to_json(const StatsReport& r) {
  using json = nlohmann::ordered_json;
  json rows = json::array();
  for (const ScenarioStats& s : r.rows) {
    rows.push_back({
        {"scenario", s.scenario},
        {"trials", s.trials},
        {"admissible_trials", s.admissible_trials},
        {"truncated_trials", s.truncated_trials},
        {"visits", s.visits},
        {"violated_visits", s.violated_visits},
        {"violation_rate", s.violation_rate},
        {"violation_wilson_lo", s.violation_ci.lo},
        {"violation_wilson_hi", s.violation_ci.hi},
        {"makespan_mean", s.makespan_mean},
        {"makespan_mean_ci_lo", s.makespan_mean_ci.lo},
        {"makespan_mean_ci_hi", s.makespan_mean_ci.hi},
        {"makespan_median", s.makespan_median},
        {"makespan_median_ci_lo", s.makespan_median_ci.lo},
        {"makespan_median_ci_hi", s.makespan_median_ci.hi},
        {"makespan_max", s.makespan_max},
        {"entries", s.entries},
        {"unfulfilled_entries", s.unfulfilled},
    });
  }
  return {{"protocol", r.protocol}, {"epsilon", r.epsilon},
          {"n", r.n},               {"seed", r.seed},
          {"trials", r.trials_per_scenario}, {"horizon", r.horizon},
          {"caps", r.caps},         {"scenarios", std::move(rows)}};
}

inline std::string report_to_csv(const StatsReport& r) {
  std::string out =
      "protocol,epsilon,n,seed,horizon,scenario,trials,admissible_trials,"
      "truncated_trials,visits,violated_visits,violation_rate,violation_wilson_lo,"
      "violation_wilson_hi,makespan_mean,makespan_mean_ci_lo,makespan_mean_ci_hi,"
      "makespan_median,makespan_median_ci_lo,makespan_median_ci_hi,makespan_max,"
      "entries,unfulfilled_entries\n";
  for (const ScenarioStats& s : r.rows) {
    out += r.protocol + "," + r.epsilon + "," + std::to_string(r.n) + "," +
           std::to_string(r.seed) + "," + std::to_string(r.horizon) + "," + s.scenario +
           "," + std::to_string(s.trials) + "," + std::to_string(s.admissible_trials) +
           "," + std::to_string(s.truncated_trials) + "," + std::to_string(s.visits) +
           "," + std::to_string(s.violated_visits) + "," +
           detail::fmt_double(s.violation_rate) + "," +
           detail::fmt_double(s.violation_ci.lo) + "," +
           detail::fmt_double(s.violation_ci.hi) + "," +
           detail::fmt_double(s.makespan_mean) + "," +
           detail::fmt_double(s.makespan_mean_ci.lo) + "," +
           detail::fmt_double(s.makespan_mean_ci.hi) + "," +
           detail::fmt_double(s.makespan_median) + "," +
           detail::fmt_double(s.makespan_median_ci.lo) + "," +
           detail::fmt_double(s.makespan_median_ci.hi) + "," +
           detail::fmt_double(s.makespan_max) + "," + std::to_string(s.entries) + "," +
           std::to_string(s.unfulfilled) + "\n";
  }
  return out;
}

inline void write_report_files(const StatsReport& r, const std::string& json_path,
                               const std::string& csv_path) {
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write report: " + json_path);
    out << report_to_json(r).dump(2) << "\n";
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write report: " + csv_path);
    out << report_to_csv(r);
  }
}

}  // namespace macsim
