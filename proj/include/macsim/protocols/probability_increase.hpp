#pragma once

#include <memory>

#include "macsim/protocol.hpp"
#include "macsim/util.hpp"

namespace macsim {

/// Parameters for the KN-model entry protocol. The protocol listens for
/// k = num_phases * phase_len rounds, then runs the phased transmission
/// scheme for another k rounds; phase i (1-based) transmits with
/// probability exactly 2^-i.
///
/// phase_len defaults to c_phase * ceil(log2(1/epsilon)) and num_phases to
/// c_phases * ceil(log2 n). The shipped c_phase of 2 is calibrated: with a
/// single-length phase a whole cohort occasionally completes its window
/// with no successful transmission and enters together, and the repeat
/// competitions push the per-visit violation rate past epsilon; doubling
/// the phase squares that failure probability.
struct PIConfig {
  int n = 1;
  Fraction epsilon{1, 16};
  int c_phase = 2;
  int c_phases = 1;
  int phase_len = 0;   // explicit override of c_phase * ceil(log2(1/epsilon))
  int num_phases = 0;  // explicit override of c_phases * ceil(log2 n)

  int effective_phase_len() const {
    return phase_len > 0 ? phase_len : c_phase * epsilon.ceil_log2_inverse();
  }
  int effective_num_phases() const {
    if (num_phases > 0) return num_phases;
    int p = c_phases * ceil_log2(static_cast<std::uint64_t>(n));
    return p > 0 ? p : 1;
  }
  int k() const { return effective_num_phases() * effective_phase_len(); }
};

/// Modified phased-backoff entry section: listen k rounds, resign if anyone
/// is heard; then run k phased rounds, listening whenever not transmitting
/// and resigning on any received message; a process that finishes both
/// stretches unresigned enters the critical section. A resigned process
/// listens until the critical occupant it observed goes quiet, then starts
/// over.
class ProbabilityIncreaseEntry final : public Protocol {
 public:
  ProbabilityIncreaseEntry(int pid, const PIConfig& config)
      : pid_(pid),
        k_(config.k()),
        phase_len_(config.effective_phase_len()) {}

  void begin_entry() override {
    mode_ = Mode::Listen;
    pos_ = 0;
    saw_critical_ = false;
  }

  ProtocolDecision entry_step(const StepContext& ctx) override {
    if (mode_ == Mode::Resigned) {
      if (ctx.prev.heard_critical()) {
        saw_critical_ = true;
      } else if (saw_critical_) {
        // channel released: restart the whole entry routine
        mode_ = Mode::Listen;
        pos_ = 0;
        saw_critical_ = false;
      }
    } else if (ctx.prev.heard()) {
      mode_ = Mode::Resigned;
      saw_critical_ = ctx.prev.heard_critical();
      return ProtocolDecision::act(ChannelAction::listen());
    }

    if (mode_ == Mode::Listen && pos_ == k_) {
      mode_ = Mode::Phased;
      pos_ = 0;
    }
    switch (mode_) {
      case Mode::Listen:
        ++pos_;
        return ProtocolDecision::act(ChannelAction::listen());
      case Mode::Phased: {
        if (pos_ == k_) return ProtocolDecision::move_to(Section::Critical);
        const int phase = pos_ / phase_len_ + 1;
        ++pos_;
        if (ctx.rng->bernoulli_pow2(phase))
          return ProtocolDecision::act(
              ChannelAction::transmit(Message{pid_, MessageLabel::Protocol, 1}));
        return ProtocolDecision::act(ChannelAction::listen());
      }
      case Mode::Resigned:
        return ProtocolDecision::act(ChannelAction::listen());
    }
    return ProtocolDecision::act(ChannelAction::listen());
  }

  bool resigned() const override { return mode_ == Mode::Resigned; }

 private:
  enum class Mode { Listen, Phased, Resigned };

  int pid_;
  int k_;
  int phase_len_;
  Mode mode_ = Mode::Listen;
  int pos_ = 0;
  bool saw_critical_ = false;
};

inline ProtocolFactory probability_increase_modified(const PIConfig& config) {
  if (config.n < 1) throw ConfigError("process count n is required (KN model)");
  return [config](int pid) -> std::unique_ptr<Protocol> {
    return std::make_unique<ProbabilityIncreaseEntry>(pid, config);
  };
}

}  // namespace macsim
