#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace macsim {

/// Who may read the channel and what a protocol is allowed to know.
/// `n` is the simulator-level process count; protocols may read it only
/// when `kn` is set.
struct Capabilities {
  bool cd = false;  // listeners can tell silence from collision
  bool gc = false;  // processes see the absolute round number
  bool kn = false;  // processes know the total process count
  int n = 1;

  std::string describe() const {
    std::string s;
    s += cd ? "cd" : "no-cd";
    s += gc ? ",gc" : ",no-gc";
    s += kn ? ",kn" : ",no-kn";
    return s;
  }
};

enum class MessageLabel : std::uint8_t { Protocol, Critical };

/// One transmitted unit. Payloads are small integers; the algorithms here
/// only ever need the bits 0 and 1. `sender` is carried for traces and
/// debugging; protocol code reads its own id, never a heard sender id.
struct Message {
  int sender = -1;
  MessageLabel label = MessageLabel::Protocol;
  int payload = 0;

  friend bool operator==(const Message&, const Message&) = default;
};

enum class ActionKind : std::uint8_t { Idle, Listen, Transmit };

/// What one process does on the channel in one round. Idle is reserved for
/// remainder-section processes, which have no channel role at all.
struct ChannelAction {
  ActionKind kind = ActionKind::Idle;
  Message message;  // meaningful only when kind == Transmit

  static ChannelAction idle() { return {ActionKind::Idle, {}}; }
  static ChannelAction listen() { return {ActionKind::Listen, {}}; }
  static ChannelAction transmit(Message m) { return {ActionKind::Transmit, m}; }

  bool transmits() const { return kind == ActionKind::Transmit; }

  friend bool operator==(const ChannelAction&, const ChannelAction&) = default;
};

enum class OutcomeKind : std::uint8_t { Silence, Single, Collision };

/// Global result of one round: silence with zero transmitters, the unique
/// message with one, a collision with two or more.
struct ChannelOutcome {
  OutcomeKind kind = OutcomeKind::Silence;
  Message message;  // meaningful only when kind == Single

  friend bool operator==(const ChannelOutcome&, const ChannelOutcome&) = default;
};

enum class FeedbackKind : std::uint8_t {
  NoFeedback,      // transmitters and idle processes learn nothing
  Noise,           // listener without CD: silence or collision, indistinct
  SilenceHeard,    // listener with CD
  CollisionHeard,  // listener with CD
  Heard,           // listener, unique transmission received
};

/// What one process perceives at the end of a round, after capability
/// masking. Half-duplex: a transmitter always gets NoFeedback, even when
/// its own transmission succeeded.
struct Feedback {
  FeedbackKind kind = FeedbackKind::NoFeedback;
  Message message;  // meaningful only when kind == Heard

  static Feedback none() { return {FeedbackKind::NoFeedback, {}}; }

  bool heard() const { return kind == FeedbackKind::Heard; }
  bool heard_critical() const {
    return kind == FeedbackKind::Heard && message.label == MessageLabel::Critical;
  }
  bool silent() const {
    return kind == FeedbackKind::SilenceHeard || kind == FeedbackKind::Noise;
  }

  friend bool operator==(const Feedback&, const Feedback&) = default;
};

/// Resolves one synchronous round. The outcome depends only on the number
/// of Transmit actions; with exactly one, its message is delivered.
inline ChannelOutcome resolve_round(std::span<const ChannelAction> actions) {
  int transmitters = 0;
  const Message* only = nullptr;
  for (const ChannelAction& a : actions) {
    if (a.kind == ActionKind::Transmit) {
      ++transmitters;
      only = &a.message;
    }
  }
  if (transmitters == 0) return {OutcomeKind::Silence, {}};
  if (transmitters == 1) return {OutcomeKind::Single, *only};
  return {OutcomeKind::Collision, {}};
}

/// Capability-masked per-process view of an outcome. Without CD a listener
/// cannot tell silence from collision: both collapse to Noise.
inline Feedback feedback_for(const ChannelOutcome& outcome, bool did_transmit,
                             const Capabilities& caps) {
  if (did_transmit) return Feedback::none();
  switch (outcome.kind) {
    case OutcomeKind::Single:
      return {FeedbackKind::Heard, outcome.message};
    case OutcomeKind::Silence:
      return {caps.cd ? FeedbackKind::SilenceHeard : FeedbackKind::Noise, {}};
    case OutcomeKind::Collision:
      return {caps.cd ? FeedbackKind::CollisionHeard : FeedbackKind::Noise, {}};
  }
  return Feedback::none();
}

inline const char* to_string(MessageLabel l) {
  return l == MessageLabel::Critical ? "critical" : "protocol";
}

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Idle: return "idle";
    case ActionKind::Listen: return "listen";
    case ActionKind::Transmit: return "transmit";
  }
  return "?";
}

inline const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Silence: return "silence";
    case OutcomeKind::Single: return "single";
    case OutcomeKind::Collision: return "collision";
  }
  return "?";
}

inline const char* to_string(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::NoFeedback: return "none";
    case FeedbackKind::Noise: return "noise";
    case FeedbackKind::SilenceHeard: return "silence";
    case FeedbackKind::CollisionHeard: return "collision";
    case FeedbackKind::Heard: return "heard";
  }
  return "?";
}

}  // namespace macsim
