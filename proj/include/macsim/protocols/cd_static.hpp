#pragma once

#include <memory>

#include "macsim/protocol.hpp"
#include "macsim/protocols/duplex.hpp"
#include "macsim/protocols/willard.hpp"
#include "macsim/util.hpp"

namespace macsim {

/// Parameters of the company-detection probe: 2 * ceil(log2(1/epsilon))
/// rounds, i.e. ceil(log2(1/epsilon)) coin-driven round pairs.
struct CISConfig {
  Fraction epsilon{1, 16};

  int pairs() const { return epsilon.ceil_log2_inverse(); }
  int rounds() const { return 2 * pairs(); }
};

/// Entry section for the collision-detection scenario with simultaneous
/// starts. Stage one: for each round pair, a fair coin picks whether to
/// transmit in the first round and listen in the second or the other way
/// around; a process that hears nothing but silence in all its listening
/// rounds is alone (up to the configured error) and enters the critical
/// section. Stage two, on detected company: an election over the simulated
/// full-duplex channel; the unique successful transmitter enters, everyone
/// else resigns until the channel is released and then starts over.
class CdStaticEntry final : public Protocol {
 public:
  CdStaticEntry(int pid, const CISConfig& config)
      : pid_(pid), probe_rounds_(config.rounds()), adapter_(pid), willard_(pid) {}

  void begin_entry() override { reset(); }

  ProtocolDecision entry_step(const StepContext& ctx) override {
    switch (mode_) {
      case Mode::Probe: {
        if (pos_ > 0 && ctx.prev.heard_critical()) return resign(true);
        if (pos_ > 0 && (ctx.prev.kind == FeedbackKind::Heard ||
                         ctx.prev.kind == FeedbackKind::CollisionHeard))
          heard_someone_ = true;
        if (pos_ == probe_rounds_) {
          if (!heard_someone_) return ProtocolDecision::move_to(Section::Critical);
          mode_ = Mode::ElectA;
          return elect_a(std::nullopt, *ctx.rng);
        }
        const bool first_of_pair = pos_ % 2 == 0;
        if (first_of_pair) coin_ = ctx.rng->bit();
        const bool transmit_now = first_of_pair ? coin_ : !coin_;
        ++pos_;
        if (transmit_now)
          return ProtocolDecision::act(
              ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
        return ProtocolDecision::act(ChannelAction::listen());
      }
      case Mode::ElectA: {
        std::optional<VirtualFeedback> vf;
        if (virtual_pending_) {
          // a critical-labelled message in the B round is the occupant,
          // not an acknowledgment
          if (ctx.prev.heard_critical()) return resign(true);
          vf = adapter_.finish_virtual_round(ctx.prev);
          virtual_pending_ = false;
          if (vf->kind == OutcomeKind::Single) {
            if (adapter_.transmitted_last_virtual())
              return ProtocolDecision::move_to(Section::Critical);
            return resign(vf->message.label == MessageLabel::Critical);
          }
        }
        return elect_a(vf, *ctx.rng);
      }
      case Mode::ElectB: {
        // an occupied channel ends the election for us; never ack a
        // critical message
        if (ctx.prev.heard_critical()) return resign(true);
        mode_ = Mode::ElectA;
        virtual_pending_ = true;
        return ProtocolDecision::act(adapter_.ack_round(ctx.prev));
      }
      case Mode::Resigned: {
        if (ctx.prev.heard_critical()) {
          saw_critical_ = true;
        } else if (saw_critical_) {
          reset();  // released: the whole cohort restarts in the same round
          return entry_step(ctx);
        }
        return ProtocolDecision::act(ChannelAction::listen());
      }
    }
    return ProtocolDecision::act(ChannelAction::listen());
  }

  bool resigned() const override { return mode_ == Mode::Resigned; }

 private:
  enum class Mode { Probe, ElectA, ElectB, Resigned };

  ProtocolDecision elect_a(const std::optional<VirtualFeedback>& vf, RandomSource& rng) {
    VirtualDecision d = willard_.step(vf, rng);
    mode_ = Mode::ElectB;
    return ProtocolDecision::act(adapter_.begin_virtual_round(d));
  }

  ProtocolDecision resign(bool critical_seen) {
    mode_ = Mode::Resigned;
    saw_critical_ = critical_seen;
    return ProtocolDecision::act(ChannelAction::listen());
  }

  void reset() {
    mode_ = Mode::Probe;
    pos_ = 0;
    heard_someone_ = false;
    saw_critical_ = false;
    virtual_pending_ = false;
    coin_ = false;
    adapter_.reset();
    willard_ = WillardElection(pid_);
  }

  int pid_;
  int probe_rounds_;
  Mode mode_ = Mode::Probe;
  int pos_ = 0;
  bool coin_ = false;
  bool heard_someone_ = false;
  bool saw_critical_ = false;
  bool virtual_pending_ = false;
  DuplexAdapter adapter_;
  WillardElection willard_;
};

inline ProtocolFactory cd_static_protocol(const CISConfig& config) {
  return [config](int pid) -> std::unique_ptr<Protocol> {
    return std::make_unique<CdStaticEntry>(pid, config);
  };
}

}  // namespace macsim
