#pragma once

#include <memory>
#include <optional>

#include "macsim/protocol.hpp"
#include "macsim/util.hpp"

namespace macsim {

/// Runs a base entry protocol at one third speed: every base round becomes
/// a transmit-1 round, a listen round, and then the base round's action.
/// The base protocol sees feedback only from its own (third) rounds, so its
/// decisions with fixed coins project exactly onto the standalone run. The
/// leading transmission doubles as a heartbeat that keeps later arrivals
/// from starting a competition of their own.
class SlowedEntry final : public Protocol {
 public:
  SlowedEntry(int pid, std::unique_ptr<Protocol> base)
      : pid_(pid), base_(std::move(base)) {}

  void begin_entry() override {
    base_->begin_entry();
    phase_ = 0;
    base_local_ = 0;
  }

  ProtocolDecision entry_step(const StepContext& ctx) override {
    if (phase_ == 0) {
      StepContext sub = ctx;
      sub.local_round = base_local_;
      sub.prev = base_local_ == 0 ? Feedback::none() : ctx.prev;
      ProtocolDecision dec = base_->entry_step(sub);
      if (dec.transition) return dec;
      pending_ = dec.action;
      ++base_local_;
      phase_ = 1;
      return ProtocolDecision::act(
          ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
    }
    if (phase_ == 1) {
      phase_ = 2;
      return ProtocolDecision::act(ChannelAction::listen());
    }
    phase_ = 0;
    return ProtocolDecision::act(pending_);
  }

  bool resigned() const override { return base_->resigned(); }

 private:
  int pid_;
  std::unique_ptr<Protocol> base_;
  int phase_ = 0;
  int base_local_ = 0;
  ChannelAction pending_ = ChannelAction::listen();
};

inline ProtocolFactory slowdown3(ProtocolFactory base) {
  return [base](int pid) -> std::unique_ptr<Protocol> {
    return std::make_unique<SlowedEntry>(pid, base(pid));
  };
}

/// Phase bookkeeping of the selection subroutine, identical for the guard
/// and for every competitor. Each three-round block ends in one competition
/// round whose outcome (activity or silence) everyone can derive, so all
/// parties walk through the same schedule: doubling probes bracket the
/// highest loss counter, a binary search pins it down, then a bit-by-bit
/// search from the most significant id bit selects the minimum id among
/// the processes holding that counter.
class SelectionCursor {
 public:
  explicit SelectionCursor(int id_bits) : bit_(id_bits - 1) {}

  enum class Phase { FindBracket, Narrow, IdSearch, Done };
  Phase phase() const { return phase_; }

  /// Threshold a competitor compares its loss counter against in the
  /// upcoming competition round (FindBracket / Narrow phases).
  int loss_probe() const {
    return phase_ == Phase::FindBracket ? (1 << exp_) : probe_;
  }
  /// Id bit probed in the upcoming competition round (IdSearch phase).
  int id_bit() const { return bit_; }
  /// Known maximum loss counter; valid once IdSearch begins.
  int max_loss() const { return lo_; }
  /// Best known lower bound on the maximum loss counter.
  int known_floor() const { return lo_; }

  void advance(bool activity) {
    switch (phase_) {
      case Phase::FindBracket:
        if (activity) {
          lo_ = 1 << exp_;
          ++exp_;
        } else if (exp_ == 0) {
          lo_ = 0;
          phase_ = Phase::IdSearch;
        } else {
          lo_ = 1 << (exp_ - 1);
          hi_ = (1 << exp_) - 1;
          begin_narrow();
        }
        return;
      case Phase::Narrow:
        if (activity)
          lo_ = probe_;
        else
          hi_ = probe_ - 1;
        begin_narrow();
        return;
      case Phase::IdSearch:
        --bit_;
        if (bit_ < 0) phase_ = Phase::Done;
        return;
      case Phase::Done:
        return;
    }
  }

 private:
  void begin_narrow() {
    if (lo_ >= hi_) {
      phase_ = Phase::IdSearch;
      return;
    }
    phase_ = Phase::Narrow;
    probe_ = (lo_ + hi_ + 1) / 2;
  }

  Phase phase_ = Phase::FindBracket;
  int exp_ = 0;
  int lo_ = 0;
  int hi_ = 0;
  int probe_ = 0;
  int bit_;
};

/// Competitor view of one selection run.
class SelectionCompetitor {
 public:
  SelectionCompetitor(int loss, int id, int id_bits)
      : cursor_(id_bits), loss_(loss), id_(id) {}

  enum class Status { Competing, Won, Lost };
  Status status() const { return status_; }

  /// Whether to transmit in the upcoming competition round.
  bool transmits() const {
    if (status_ != Status::Competing) return false;
    switch (cursor_.phase()) {
      case SelectionCursor::Phase::FindBracket:
      case SelectionCursor::Phase::Narrow:
        return loss_ >= cursor_.loss_probe();
      case SelectionCursor::Phase::IdSearch:
        return ((id_ >> cursor_.id_bit()) & 1) == 0;
      case SelectionCursor::Phase::Done:
        return false;
    }
    return false;
  }

  /// Digest the competition-round outcome; may settle the run.
  void observe(bool activity) {
    if (status_ != Status::Competing) return;
    const SelectionCursor::Phase phase = cursor_.phase();
    if (phase == SelectionCursor::Phase::IdSearch && activity &&
        ((id_ >> cursor_.id_bit()) & 1) == 1) {
      status_ = Status::Lost;  // someone alive carries a smaller id
    }
    cursor_.advance(activity);
    if (status_ != Status::Competing) return;
    if (cursor_.phase() == SelectionCursor::Phase::IdSearch && loss_ < cursor_.max_loss()) {
      status_ = Status::Lost;  // counter search settled above mine
      return;
    }
    if (loss_ < cursor_.known_floor()) {
      status_ = Status::Lost;
      return;
    }
    if (cursor_.phase() == SelectionCursor::Phase::Done) status_ = Status::Won;
  }

 private:
  SelectionCursor cursor_;
  int loss_;
  int id_;
  Status status_ = Status::Competing;
};

struct FairnessConfig {
  ProtocolFactory base;
  int id_bits = 1;  // ids must fit: ceil(log2 n) when n is known
};

/// No-lockout transformation for the collision-detection scenario.
///
/// Entry: listen three rounds. A fully silent channel means no competition
/// and no occupant, so run the slowed base protocol until somebody reaches
/// the critical section, then start over. A channel showing 1,1,1 or 1,1,0
/// is occupied: keep listening for the 1,1,0 payload pattern an exit guard
/// produces, transmit in the following round, and enter the selection the
/// round after that. Anything else is a competition in progress: reset and
/// listen again. Losing a competition is observed as some other process
/// starting to transmit critical messages, which bumps the loss counter
/// the selection favours.
///
/// Exit: transmit 0, listen; on silence the channel is free and the exit
/// ends, otherwise referee one selection run as the guard.
class FairProtocol final : public Protocol {
 public:
  FairProtocol(int pid, const FairnessConfig& config)
      : pid_(pid), config_(config) {
    if (pid_ >= (1 << config_.id_bits))
      throw ConfigError("id does not fit in the configured id bit width");
  }

  void begin_entry() override {
    emode_ = EMode::InitListen;
    listened_ = 0;
    window_clear();
    loss_ = 0;
    crit_active_ = false;
    slowed_.reset();
    competitor_.reset();
  }

  ProtocolDecision entry_step(const StepContext& ctx) override {
    observe_for_loss(ctx);
    switch (emode_) {
      case EMode::InitListen: {
        if (listened_ > 0) window_push(symbol_of(ctx.prev));
        if (listened_ == 3) {
          if (w_[0] == kSilent && w_[1] == kSilent && w_[2] == kSilent)
            return start_base(ctx);
          const bool occupied = w_[0] == 1 && w_[1] == 1 && (w_[2] == 1 || w_[2] == 0);
          if (!occupied) {  // competition in progress: start over
            listened_ = 0;
            window_clear();
            return entry_step_listen();
          }
          emode_ = EMode::Wait110;
          return wait110_step();
        }
        return entry_step_listen();
      }
      case EMode::RunBase: {
        if (ctx.prev.heard_critical()) {
          // somebody made it; reset and rejoin through the wait path
          slowed_.reset();
          emode_ = EMode::InitListen;
          listened_ = 0;
          window_clear();
          return entry_step_listen();
        }
        StepContext sub = ctx;
        sub.local_round = base_local_;
        sub.prev = base_local_ == 0 ? Feedback::none() : ctx.prev;
        ProtocolDecision dec = slowed_->entry_step(sub);
        if (dec.transition) return dec;
        ++base_local_;
        return dec;
      }
      case EMode::Wait110: {
        window_push(symbol_of(ctx.prev));
        return wait110_step();
      }
      case EMode::Compete: {
        return compete_step(ctx);
      }
    }
    return ProtocolDecision::act(ChannelAction::listen());
  }

  void begin_exit() override {
    xpos_ = 0;
    guard_cursor_.reset();
    guard_block_ = 0;
    guard_pending_ = false;
  }

  ProtocolDecision exit_step(const StepContext& ctx) override {
    if (xpos_ == 0) {
      ++xpos_;
      return ProtocolDecision::act(
          ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 0}));
    }
    if (xpos_ == 1) {
      ++xpos_;
      return ProtocolDecision::act(ChannelAction::listen());
    }
    if (xpos_ == 2) {
      ++xpos_;
      if (ctx.prev.silent()) return ProtocolDecision::move_to(Section::Remainder);
      guard_cursor_.emplace(config_.id_bits);
      guard_block_ = 0;
      guard_pending_ = false;
    }
    // guard side of the selection blocks
    if (guard_pending_) {
      guard_pending_ = false;
      guard_cursor_->advance(!ctx.prev.silent());
      if (guard_cursor_->phase() == SelectionCursor::Phase::Done)
        return ProtocolDecision::move_to(Section::Remainder);
    }
    switch (guard_block_) {
      case 0:
        guard_block_ = 1;
        return ProtocolDecision::act(
            ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
      case 1:
        guard_block_ = 2;
        return ProtocolDecision::act(
            ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 0}));
      default:
        guard_block_ = 0;
        guard_pending_ = true;
        return ProtocolDecision::act(ChannelAction::listen());
    }
  }

  std::optional<int> loss_counter() const override { return loss_; }

 private:
  enum class EMode { InitListen, RunBase, Wait110, Compete };

  static constexpr int kSilent = -1;     // payload symbols are >= 0
  static constexpr int kCollision = -2;
  static constexpr int kNone = -3;

  static int symbol_of(const Feedback& fb) {
    switch (fb.kind) {
      case FeedbackKind::Heard: return fb.message.payload;
      case FeedbackKind::SilenceHeard:
      case FeedbackKind::Noise: return kSilent;
      case FeedbackKind::CollisionHeard: return kCollision;
      case FeedbackKind::NoFeedback: return kNone;
    }
    return kNone;
  }

  /// Loss counting reads only the channel: a run of critical-labelled
  /// messages starting after my own first round means some other process
  /// entered the critical section while I was waiting. Occupancy already
  /// visible in my first round predates me and does not count.
  void observe_for_loss(const StepContext& ctx) {
    if (ctx.prev.kind == FeedbackKind::NoFeedback) return;  // transmitted or fresh
    if (ctx.prev.heard_critical()) {
      if (!crit_active_ && ctx.local_round > 1) ++loss_;
      crit_active_ = true;
    } else {
      crit_active_ = false;
    }
  }

  ProtocolDecision entry_step_listen() {
    ++listened_;
    return ProtocolDecision::act(ChannelAction::listen());
  }

  void window_clear() { w_[0] = w_[1] = w_[2] = kNone; }

  void window_push(int sym) {
    w_[0] = w_[1];
    w_[1] = w_[2];
    w_[2] = sym;
  }

  ProtocolDecision start_base(const StepContext& ctx) {
    slowed_ = std::make_unique<SlowedEntry>(pid_, config_.base(pid_));
    slowed_->begin_entry();
    base_local_ = 0;
    emode_ = EMode::RunBase;
    StepContext sub = ctx;
    sub.local_round = 0;
    sub.prev = Feedback::none();
    ProtocolDecision dec = slowed_->entry_step(sub);
    base_local_ = 1;
    return dec;
  }

  ProtocolDecision wait110_step() {
    if (w_[0] == kSilent && w_[1] == kSilent && w_[2] == kSilent) {
      // dead channel: no occupant and no guard is coming; start over
      emode_ = EMode::InitListen;
      listened_ = 0;
      window_clear();
      return entry_step_listen();
    }
    if (w_[0] == 1 && w_[1] == 1 && w_[2] == 0) {
      emode_ = EMode::Compete;
      comp_round_ = -1;
      competitor_.emplace(loss_, pid_, config_.id_bits);
      comp_transmitted_ = false;
      comp_pending_ = false;
      return ProtocolDecision::act(
          ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
    }
    return ProtocolDecision::act(ChannelAction::listen());
  }

  ProtocolDecision compete_step(const StepContext& ctx) {
    if (comp_pending_) {
      comp_pending_ = false;
      const bool activity = comp_transmitted_ || !ctx.prev.silent();
      competitor_->observe(activity);
      if (competitor_->status() == SelectionCompetitor::Status::Won)
        return ProtocolDecision::move_to(Section::Critical);
      if (competitor_->status() == SelectionCompetitor::Status::Lost) {
        emode_ = EMode::Wait110;
        window_clear();
        return ProtocolDecision::act(ChannelAction::listen());
      }
    }
    if (comp_round_ < 0) comp_round_ = 0;
    switch (comp_round_) {
      case 0:  // guard transmits 1
        comp_round_ = 1;
        return ProtocolDecision::act(ChannelAction::listen());
      case 1:  // guard transmits 0
        comp_round_ = 2;
        return ProtocolDecision::act(ChannelAction::listen());
      default: {
        comp_round_ = 0;
        comp_pending_ = true;
        comp_transmitted_ = competitor_->transmits();
        if (comp_transmitted_)
          return ProtocolDecision::act(
              ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 0}));
        return ProtocolDecision::act(ChannelAction::listen());
      }
    }
  }

  int pid_;
  FairnessConfig config_;

  EMode emode_ = EMode::InitListen;
  int listened_ = 0;
  int w_[3] = {kNone, kNone, kNone};
  int loss_ = 0;
  bool crit_active_ = false;

  std::unique_ptr<SlowedEntry> slowed_;
  int base_local_ = 0;

  std::optional<SelectionCompetitor> competitor_;
  int comp_round_ = -1;
  bool comp_transmitted_ = false;
  bool comp_pending_ = false;

  int xpos_ = 0;
  std::optional<SelectionCursor> guard_cursor_;
  int guard_block_ = 0;
  bool guard_pending_ = false;
};

/// Wraps a CD entry protocol with the loss-counter fairness scheme.
inline ProtocolFactory fairness_wrap(const FairnessConfig& config) {
  if (config.id_bits < 1) throw ConfigError("id bit width must be at least 1");
  return [config](int pid) -> std::unique_ptr<Protocol> {
    return std::make_unique<FairProtocol>(pid, config);
  };
}

}  // namespace macsim
