#pragma once

#include <memory>

#include "macsim/protocol.hpp"

namespace macsim {

/// Turns a simultaneous-start entry protocol into one that tolerates
/// arbitrary arrival times, at twice the speed plus two rounds. A new
/// process listens for two rounds; on total silence it claims the channel
/// with a start signal and runs the wrapped protocol on every second round,
/// transmitting a busy signal in between, so any two consecutive rounds
/// carry activity. A process that hears anything instead waits for two
/// consecutive quiet rounds - those double as its probe - and then competes
/// in the next cohort. Cohorts therefore always start in the same round.
/// Two quiet rounds cannot occur during a competition (the busy signal) or
/// during occupancy (critical messages land every round, as collisions if
/// need be), so the rule releases waiters exactly when the channel is free.
class BusyChannelEntry final : public Protocol {
 public:
  BusyChannelEntry(int pid, ProtocolFactory base_factory)
      : pid_(pid), base_factory_(std::move(base_factory)) {}

  void begin_entry() override {
    mode_ = Mode::Probe;
    pos_ = 0;
    quiet_run_ = 0;
    base_.reset();
  }

  ProtocolDecision entry_step(const StepContext& ctx) override {
    switch (mode_) {
      case Mode::Probe: {
        if (pos_ == 0) {
          ++pos_;
          return ProtocolDecision::act(ChannelAction::listen());
        }
        if (pos_ == 1) {
          first_probe_silent_ = ctx.prev.silent();
          note_wait_feedback(ctx.prev);
          ++pos_;
          return ProtocolDecision::act(ChannelAction::listen());
        }
        note_wait_feedback(ctx.prev);
        if (first_probe_silent_ && ctx.prev.silent()) return start_running(ctx);
        mode_ = Mode::Wait;
        return ProtocolDecision::act(ChannelAction::listen());
      }
      case Mode::Wait: {
        note_wait_feedback(ctx.prev);
        if (quiet_run_ >= 2) return start_running(ctx);
        return ProtocolDecision::act(ChannelAction::listen());
      }
      case Mode::Running: {
        if (phase_ == RunPhase::FirstBase) {
          StepContext sub = substrate_context(ctx, Feedback::none());
          ProtocolDecision dec = base_->entry_step(sub);
          if (dec.transition) return dec;
          ++base_local_;
          phase_ = RunPhase::Busy;
          return dec;
        }
        if (phase_ == RunPhase::Busy) {
          // the wrapped protocol consumes only base-round feedback; its
          // next decision is made here and held for the next slot
          StepContext sub = substrate_context(ctx, ctx.prev);
          ProtocolDecision dec = base_->entry_step(sub);
          if (dec.transition) return dec;
          if (base_->resigned()) {
            mode_ = Mode::Wait;
            quiet_run_ = 0;
            base_.reset();
            return ProtocolDecision::act(ChannelAction::listen());
          }
          ++base_local_;
          pending_ = dec.action;
          phase_ = RunPhase::Base;
          return ProtocolDecision::act(
              ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
        }
        // RunPhase::Base: emit the held action; busy-round feedback is
        // nobody's business
        phase_ = RunPhase::Busy;
        return ProtocolDecision::act(pending_);
      }
    }
    return ProtocolDecision::act(ChannelAction::listen());
  }

 private:
  enum class Mode { Probe, Wait, Running };
  enum class RunPhase { FirstBase, Busy, Base };

  void note_wait_feedback(const Feedback& fb) {
    if (fb.silent())
      ++quiet_run_;
    else
      quiet_run_ = 0;
  }

  ProtocolDecision start_running(const StepContext& ctx) {
    mode_ = Mode::Running;
    phase_ = RunPhase::FirstBase;
    base_ = base_factory_(ctx.pid);
    base_->begin_entry();
    base_local_ = 0;
    return ProtocolDecision::act(
        ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
  }

  StepContext substrate_context(const StepContext& ctx, const Feedback& prev) const {
    StepContext sub = ctx;
    sub.local_round = base_local_;
    sub.prev = prev;
    return sub;
  }

  int pid_;
  ProtocolFactory base_factory_;
  std::unique_ptr<Protocol> base_;
  Mode mode_ = Mode::Probe;
  RunPhase phase_ = RunPhase::FirstBase;
  int pos_ = 0;
  int base_local_ = 0;
  bool first_probe_silent_ = false;
  int quiet_run_ = 0;
  ChannelAction pending_ = ChannelAction::listen();
};

/// Wraps a simultaneous-start protocol factory for dynamic arrivals.
inline ProtocolFactory static_to_dynamic(ProtocolFactory base) {
  return [base](int pid) -> std::unique_ptr<Protocol> {
    return std::make_unique<BusyChannelEntry>(pid, base);
  };
}

}  // namespace macsim
