#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "macsim/channel.hpp"
#include "macsim/rng.hpp"

namespace macsim {

/// The four-section process lifecycle. A process is in exactly one section
/// each round; changes happen momentarily between rounds and always follow
/// the cycle Remainder -> Entry -> Critical -> Exit -> Remainder.
enum class Section : std::uint8_t { Remainder, Entry, Critical, Exit };

inline const char* to_string(Section s) {
  switch (s) {
    case Section::Remainder: return "remainder";
    case Section::Entry: return "entry";
    case Section::Critical: return "critical";
    case Section::Exit: return "exit";
  }
  return "?";
}

/// What a protocol step produces. When `transition` is set, the section
/// change applies at the current round boundary and the new section's own
/// rules decide the action for this round; `action` is then ignored.
struct ProtocolDecision {
  std::optional<Section> transition;
  ChannelAction action = ChannelAction::listen();

  static ProtocolDecision act(ChannelAction a) { return {std::nullopt, a}; }
  static ProtocolDecision move_to(Section s) { return {s, ChannelAction::listen()}; }
};

/// Inputs to one protocol step. `prev` is the feedback the process received
/// for the previous round; on the first round of a section run it is
/// NoFeedback. `clock` carries the absolute round number only under GC.
struct StepContext {
  int pid = 0;
  int local_round = 0;  // rounds already spent in the current section run
  Feedback prev;
  std::optional<int> clock;
  const Capabilities* caps = nullptr;
  RandomSource* rng = nullptr;
};

/// Entry/exit subroutine pair for one process. Instances are confined to a
/// single simulation trial. The default exit is empty: the process passes
/// through the exit section in zero rounds.
class Protocol {
 public:
  virtual ~Protocol() = default;

  virtual void begin_entry() {}
  virtual ProtocolDecision entry_step(const StepContext& ctx) = 0;

  virtual void begin_exit() {}
  virtual ProtocolDecision exit_step(const StepContext&) {
    return ProtocolDecision::move_to(Section::Remainder);
  }

  /// True while the process has stopped competing and stays silent until
  /// the channel is released.
  virtual bool resigned() const { return false; }

  /// Loss counter for fairness-wrapped protocols; unset otherwise.
  virtual std::optional<int> loss_counter() const { return std::nullopt; }
};

using ProtocolFactory = std::function<std::unique_ptr<Protocol>(int pid)>;

/// The one legal critical-section behaviour: transmit the critical message
/// every round. Leaving the critical section is the adversary's call, not
/// the protocol's.
inline ProtocolDecision critical_decision(int pid) {
  return ProtocolDecision::act(
      ChannelAction::transmit(Message{pid, MessageLabel::Critical, 1}));
}

/// Raised when a protocol returns a decision the model forbids; the
/// simulator aborts the trial with this report.
class ProtocolViolationError : public std::runtime_error {
 public:
  ProtocolViolationError(int round, int pid, const std::string& what)
      : std::runtime_error("protocol violation at round " + std::to_string(round) +
                           ", process " + std::to_string(pid) + ": " + what),
        round(round),
        pid(pid) {}

  int round;
  int pid;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace macsim
