#pragma once

#include <algorithm>

#include "macsim/protocols/duplex.hpp"

namespace macsim {

/// Leader election on a full-duplex channel with collision detection.
/// Every surviving participant transmits with probability 2^-e; the shared
/// feedback steers a common search for the exponent where exactly one
/// transmits. Collision means e is too small, silence too large. A doubling
/// sweep brackets the threshold, a binary search narrows it; if the bracket
/// empties without a success the whole search restarts with fresh coins.
/// The caller stops stepping once a round comes back Single.
class WillardElection final : public VirtualProtocol {
 public:
  explicit WillardElection(int pid) : pid_(pid) {}

  VirtualDecision step(const std::optional<VirtualFeedback>& prev,
                       RandomSource& rng) override {
    if (prev) advance(prev->kind);
    return {rng.bernoulli_pow2(e_), Message{pid_, MessageLabel::Protocol, 1}};
  }

  int exponent() const { return e_; }

 private:
  void advance(OutcomeKind outcome) {
    switch (outcome) {
      case OutcomeKind::Single:
        // election decided; a fresh search if the caller keeps going
        restart();
        return;
      case OutcomeKind::Collision:
        if (mode_ == Mode::Doubling) {
          last_collision_ = e_;
          e_ = e_ == 0 ? 1 : std::min(e_ * 2, 62);
        } else {
          lo_ = e_;
          probe_or_restart();
        }
        return;
      case OutcomeKind::Silence:
        if (mode_ == Mode::Doubling) {
          mode_ = Mode::Binary;
          lo_ = last_collision_;
          hi_ = e_;
          probe_or_restart();
        } else {
          hi_ = e_;
          probe_or_restart();
        }
        return;
    }
  }

  void probe_or_restart() {
    // successes live strictly between the last collision and last silence
    if (hi_ - lo_ <= 1) {
      restart();
      return;
    }
    e_ = (lo_ + hi_) / 2;
  }

  void restart() {
    mode_ = Mode::Doubling;
    e_ = 0;
    last_collision_ = 0;
  }

  enum class Mode { Doubling, Binary };

  int pid_;
  Mode mode_ = Mode::Doubling;
  int e_ = 0;
  int last_collision_ = 0;
  int lo_ = 0;
  int hi_ = 0;
};

}  // namespace macsim
