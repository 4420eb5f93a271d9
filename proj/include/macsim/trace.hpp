#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "macsim/channel.hpp"
#include "macsim/protocol.hpp"

namespace macsim {

/// One process in one round, as recorded.
struct ProcRound {
  Section section = Section::Remainder;
  ChannelAction action;
  Feedback feedback;
  int loss = -1;  // loss counter when the protocol exposes one, else -1
};

enum class AdversaryEventKind : std::uint8_t { EntryStart, ForcedExit };

struct AdversaryEvent {
  AdversaryEventKind kind;
  int pid;
};

struct RoundRecord {
  ChannelOutcome outcome;
  std::vector<ProcRound> procs;
  std::vector<AdversaryEvent> events;
};

/// Full round-by-round record of one trial. Deterministic schedule
/// positions referenced elsewhere are 1-based: position i of a schedule
/// runs at trace round i-1.
struct ExecutionTrace {
  int n = 0;
  std::uint64_t seed = 0;
  Capabilities caps;
  std::string protocol;
  std::string strategy;
  int horizon = 0;
  bool truncated = false;
  std::vector<RoundRecord> rounds;
};

namespace detail {

inline nlohmann::ordered_json message_json(const Message& m) {
  return {{"sender", m.sender}, {"label", to_string(m.label)}, {"payload", m.payload}};
}

inline Message message_from(const nlohmann::json& j) {
  Message m;
  m.sender = j.at("sender").get<int>();
  m.label = j.at("label").get<std::string>() == "critical" ? MessageLabel::Critical
                                                           : MessageLabel::Protocol;
  m.payload = j.at("payload").get<int>();
  return m;
}

}  // namespace detail

/// Writes the trace as JSON-lines: one header line, one line per round,
/// one summary line. Field order is fixed so identical runs produce
/// byte-identical files.
inline void write_jsonl(const ExecutionTrace& t, std::ostream& out) {
  using json = nlohmann::ordered_json;
  json header = {
      {"type", "header"},
      {"n", t.n},
      {"seed", t.seed},
      {"caps", {{"cd", t.caps.cd}, {"gc", t.caps.gc}, {"kn", t.caps.kn}}},
      {"protocol", t.protocol},
      {"strategy", t.strategy},
      {"horizon", t.horizon},
      {"schedule_round_base", 1},
  };
  out << header.dump() << "\n";
  for (std::size_t r = 0; r < t.rounds.size(); ++r) {
    const RoundRecord& rec = t.rounds[r];
    json outcome = {{"kind", to_string(rec.outcome.kind)}};
    if (rec.outcome.kind == OutcomeKind::Single)
      outcome["msg"] = detail::message_json(rec.outcome.message);
    json procs = json::array();
    for (const ProcRound& p : rec.procs) {
      json pj = {{"section", to_string(p.section)},
                 {"action", {{"kind", to_string(p.action.kind)}}}};
      if (p.action.kind == ActionKind::Transmit)
        pj["action"]["msg"] = detail::message_json(p.action.message);
      pj["feedback"] = {{"kind", to_string(p.feedback.kind)}};
      if (p.feedback.kind == FeedbackKind::Heard)
        pj["feedback"]["msg"] = detail::message_json(p.feedback.message);
      if (p.loss >= 0) pj["loss"] = p.loss;
      procs.push_back(std::move(pj));
    }
    json events = json::array();
    for (const AdversaryEvent& e : rec.events) {
      events.push_back(
          {{"kind", e.kind == AdversaryEventKind::EntryStart ? "entry_start" : "forced_exit"},
           {"process", e.pid}});
    }
    json line = {{"type", "round"},
                 {"round", static_cast<int>(r)},
                 {"outcome", std::move(outcome)},
                 {"procs", std::move(procs)},
                 {"events", std::move(events)}};
    out << line.dump() << "\n";
  }
  json summary = {{"type", "summary"},
                  {"rounds", static_cast<int>(t.rounds.size())},
                  {"truncated", t.truncated}};
  out << summary.dump() << "\n";
}

inline void write_jsonl_file(const ExecutionTrace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  write_jsonl(t, out);
}

inline ExecutionTrace read_jsonl(std::istream& in) {
  using json = nlohmann::json;
  ExecutionTrace t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("trace parse error at line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      t.n = j.at("n").get<int>();
      t.seed = j.at("seed").get<std::uint64_t>();
      t.caps.cd = j.at("caps").at("cd").get<bool>();
      t.caps.gc = j.at("caps").at("gc").get<bool>();
      t.caps.kn = j.at("caps").at("kn").get<bool>();
      t.caps.n = t.n;
      t.protocol = j.value("protocol", "");
      t.strategy = j.value("strategy", "");
      t.horizon = j.value("horizon", 0);
    } else if (type == "round") {
      RoundRecord rec;
      const json& oj = j.at("outcome");
      const std::string ok = oj.at("kind").get<std::string>();
      rec.outcome.kind = ok == "single"      ? OutcomeKind::Single
                         : ok == "collision" ? OutcomeKind::Collision
                                             : OutcomeKind::Silence;
      if (rec.outcome.kind == OutcomeKind::Single)
        rec.outcome.message = detail::message_from(oj.at("msg"));
      for (const json& pj : j.at("procs")) {
        ProcRound p;
        const std::string sec = pj.at("section").get<std::string>();
        p.section = sec == "entry"      ? Section::Entry
                    : sec == "critical" ? Section::Critical
                    : sec == "exit"     ? Section::Exit
                                        : Section::Remainder;
        const json& aj = pj.at("action");
        const std::string ak = aj.at("kind").get<std::string>();
        p.action.kind = ak == "transmit" ? ActionKind::Transmit
                        : ak == "listen" ? ActionKind::Listen
                                         : ActionKind::Idle;
        if (p.action.kind == ActionKind::Transmit)
          p.action.message = detail::message_from(aj.at("msg"));
        if (pj.contains("feedback")) {
          const json& fj = pj.at("feedback");
          const std::string fk = fj.at("kind").get<std::string>();
          p.feedback.kind = fk == "heard"       ? FeedbackKind::Heard
                            : fk == "noise"     ? FeedbackKind::Noise
                            : fk == "silence"   ? FeedbackKind::SilenceHeard
                            : fk == "collision" ? FeedbackKind::CollisionHeard
                                                : FeedbackKind::NoFeedback;
          if (p.feedback.kind == FeedbackKind::Heard)
            p.feedback.message = detail::message_from(fj.at("msg"));
        }
        p.loss = pj.value("loss", -1);
        rec.procs.push_back(std::move(p));
      }
      if (j.contains("events")) {
        for (const json& ej : j.at("events")) {
          AdversaryEvent e{ej.at("kind").get<std::string>() == "entry_start"
                               ? AdversaryEventKind::EntryStart
                               : AdversaryEventKind::ForcedExit,
                           ej.at("process").get<int>()};
          rec.events.push_back(e);
        }
      }
      t.rounds.push_back(std::move(rec));
    } else if (type == "summary") {
      t.truncated = j.value("truncated", false);
    }
  }
  if (t.n == 0 && !t.rounds.empty()) t.n = static_cast<int>(t.rounds[0].procs.size());
  return t;
}

inline ExecutionTrace read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return read_jsonl(in);
}

}  // namespace macsim
