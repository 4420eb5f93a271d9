#pragma once

#include <optional>

#include "macsim/channel.hpp"
#include "macsim/rng.hpp"

namespace macsim {

/// Outcome of one virtual full-duplex round, visible to every active
/// process including transmitters: nobody, exactly one message, or a
/// collision.
struct VirtualFeedback {
  OutcomeKind kind = OutcomeKind::Silence;
  Message message;  // meaningful only when kind == Single

  friend bool operator==(const VirtualFeedback&, const VirtualFeedback&) = default;
};

struct VirtualDecision {
  bool transmit = false;
  Message message;
};

/// A protocol written for the channel model in which a process transmits
/// and listens simultaneously. `prev` is empty on the first virtual round.
class VirtualProtocol {
 public:
  virtual ~VirtualProtocol() = default;
  virtual VirtualDecision step(const std::optional<VirtualFeedback>& prev,
                               RandomSource& rng) = 0;
};

/// Maps one virtual full-duplex round onto two physical half-duplex rounds
/// under collision detection. Round A carries the virtual transmission;
/// in round B every listener that received a message acknowledges it, so
/// the round-A transmitter can reconstruct its own success: any activity
/// in round B means the transmission went through. Requires at least two
/// active processes, otherwise a successful transmitter has no one to
/// acknowledge it.
class DuplexAdapter {
 public:
  explicit DuplexAdapter(int pid) : pid_(pid) {}

  void reset() {
    phase_ = Phase::A;
    sent_a_ = false;
  }

  enum class Phase { A, B };
  Phase phase() const { return phase_; }

  /// Phase A: emit the virtual action physically.
  ChannelAction begin_virtual_round(const VirtualDecision& d) {
    sent_a_ = d.transmit;
    own_message_ = d.message;
    phase_ = Phase::B;
    if (d.transmit) return ChannelAction::transmit(d.message);
    return ChannelAction::listen();
  }

  /// Phase B: consume the A-round feedback and produce the B-round action.
  ChannelAction ack_round(const Feedback& a_feedback) {
    a_feedback_ = a_feedback;
    phase_ = Phase::A;
    if (!sent_a_ && a_feedback.heard())
      return ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1});
    return ChannelAction::listen();
  }

  /// After the B round: the virtual feedback for the completed round.
  VirtualFeedback finish_virtual_round(const Feedback& b_feedback) const {
    if (sent_a_) {
      const bool acked = b_feedback.kind == FeedbackKind::Heard ||
                         b_feedback.kind == FeedbackKind::CollisionHeard;
      if (acked) return {OutcomeKind::Single, own_message_};
      return {OutcomeKind::Collision, {}};
    }
    switch (a_feedback_.kind) {
      case FeedbackKind::Heard: return {OutcomeKind::Single, a_feedback_.message};
      case FeedbackKind::CollisionHeard: return {OutcomeKind::Collision, {}};
      default: return {OutcomeKind::Silence, {}};
    }
  }

  bool transmitted_last_virtual() const { return sent_a_; }
  const Feedback& a_feedback() const { return a_feedback_; }

 private:
  int pid_;
  Phase phase_ = Phase::A;
  bool sent_a_ = false;
  Message own_message_;
  Feedback a_feedback_;
};

}  // namespace macsim
