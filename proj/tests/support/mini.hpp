#pragma once

// Test-side drivers: a bare entry-protocol channel loop (no adversary, a
// process that enters the critical section just transmits the critical
// message from then on) and a reference full-duplex channel for checking
// the two-round simulation against the model it simulates.

#include <memory>
#include <optional>
#include <vector>

#include "macsim/channel.hpp"
#include "macsim/protocol.hpp"
#include "macsim/protocols/duplex.hpp"
#include "macsim/rng.hpp"

namespace macsim::testing {

struct MiniRun {
  std::vector<std::vector<ChannelAction>> actions;  // [round][pid]
  std::vector<ChannelOutcome> outcomes;
  std::vector<int> entered_at;  // first critical round per process, -1 if never
};

inline MiniRun run_entry_only(std::vector<Protocol*> protocols,
                              std::vector<RandomSource*> rngs, const Capabilities& caps,
                              int rounds) {
  const int n = static_cast<int>(protocols.size());
  MiniRun out;
  out.entered_at.assign(n, -1);
  std::vector<Feedback> prev(n, Feedback::none());
  std::vector<int> local(n, 0);
  std::vector<bool> critical(n, false);
  for (Protocol* p : protocols) p->begin_entry();

  for (int t = 0; t < rounds; ++t) {
    std::vector<ChannelAction> acts(n);
    for (int p = 0; p < n; ++p) {
      if (critical[p]) {
        acts[p] = critical_decision(p).action;
        continue;
      }
      StepContext ctx;
      ctx.pid = p;
      ctx.local_round = local[p];
      ctx.prev = prev[p];
      ctx.caps = &caps;
      ctx.rng = rngs[p];
      ProtocolDecision dec = protocols[p]->entry_step(ctx);
      if (dec.transition) {
        critical[p] = true;
        out.entered_at[p] = t;
        acts[p] = critical_decision(p).action;
      } else {
        acts[p] = dec.action;
        ++local[p];
      }
    }
    ChannelOutcome outcome = resolve_round(acts);
    for (int p = 0; p < n; ++p)
      prev[p] = acts[p].kind == ActionKind::Idle
                    ? Feedback::none()
                    : feedback_for(outcome, acts[p].transmits(), caps);
    out.actions.push_back(std::move(acts));
    out.outcomes.push_back(outcome);
  }
  return out;
}

/// Reference implementation of the full-duplex channel with collision
/// detection: every active process, transmitters included, observes the
/// round outcome directly.
struct FullDuplexRun {
  std::vector<std::vector<VirtualDecision>> decisions;  // [round][pid]
  std::vector<VirtualFeedback> outcomes;
};

inline FullDuplexRun run_full_duplex(std::vector<VirtualProtocol*> protocols,
                                     std::vector<RandomSource*> rngs, int rounds) {
  const int n = static_cast<int>(protocols.size());
  FullDuplexRun out;
  std::optional<VirtualFeedback> prev;
  for (int t = 0; t < rounds; ++t) {
    std::vector<VirtualDecision> ds(n);
    for (int p = 0; p < n; ++p) ds[p] = protocols[p]->step(prev, *rngs[p]);
    int transmitters = 0;
    Message only;
    for (const VirtualDecision& d : ds) {
      if (d.transmit) {
        ++transmitters;
        only = d.message;
      }
    }
    VirtualFeedback vf;
    if (transmitters == 0) vf = {OutcomeKind::Silence, {}};
    else if (transmitters == 1) vf = {OutcomeKind::Single, only};
    else vf = {OutcomeKind::Collision, {}};
    out.decisions.push_back(std::move(ds));
    out.outcomes.push_back(vf);
    prev = vf;
  }
  return out;
}

/// Runs the same virtual protocols through the two-round simulation over
/// the physical half-duplex channel; records the decisions made and the
/// virtual feedback each process reconstructs.
struct SimulatedDuplexRun {
  std::vector<std::vector<VirtualDecision>> decisions;          // [round][pid]
  std::vector<std::vector<VirtualFeedback>> reconstructed;      // [round][pid]
};

inline SimulatedDuplexRun run_simulated_duplex(std::vector<VirtualProtocol*> protocols,
                                               std::vector<RandomSource*> rngs,
                                               int virtual_rounds) {
  const int n = static_cast<int>(protocols.size());
  Capabilities caps;
  caps.cd = true;
  caps.n = n;
  SimulatedDuplexRun out;
  std::vector<DuplexAdapter> adapters;
  for (int p = 0; p < n; ++p) adapters.emplace_back(p);
  std::vector<Feedback> prev(n, Feedback::none());
  std::optional<std::vector<VirtualFeedback>> pending;

  for (int v = 0; v < virtual_rounds; ++v) {
    // phase A
    std::vector<VirtualDecision> ds(n);
    std::vector<ChannelAction> acts(n);
    for (int p = 0; p < n; ++p) {
      std::optional<VirtualFeedback> vprev;
      if (pending) vprev = (*pending)[p];
      ds[p] = protocols[p]->step(vprev, *rngs[p]);
      acts[p] = adapters[p].begin_virtual_round(ds[p]);
    }
    ChannelOutcome a_outcome = resolve_round(acts);
    for (int p = 0; p < n; ++p)
      prev[p] = feedback_for(a_outcome, acts[p].transmits(), caps);

    // phase B
    for (int p = 0; p < n; ++p) acts[p] = adapters[p].ack_round(prev[p]);
    ChannelOutcome b_outcome = resolve_round(acts);
    for (int p = 0; p < n; ++p)
      prev[p] = feedback_for(b_outcome, acts[p].transmits(), caps);

    std::vector<VirtualFeedback> vfs(n);
    for (int p = 0; p < n; ++p) vfs[p] = adapters[p].finish_virtual_round(prev[p]);
    out.decisions.push_back(ds);
    out.reconstructed.push_back(vfs);
    pending = vfs;
  }
  return out;
}

/// Feedback-sensitive scripted protocol for exhaustive equivalence checks:
/// transmits when its next script bit differs from "the previous virtual
/// round collided".
class ScriptedVirtual final : public VirtualProtocol {
 public:
  ScriptedVirtual(int pid, std::vector<bool> coins) : pid_(pid), coins_(std::move(coins)) {}

  VirtualDecision step(const std::optional<VirtualFeedback>& prev, RandomSource&) override {
    const bool coin = coins_[pos_++ % coins_.size()];
    const bool collided = prev && prev->kind == OutcomeKind::Collision;
    return {coin != collided, Message{pid_, MessageLabel::Protocol, pid_ + 1}};
  }

 private:
  int pid_;
  std::vector<bool> coins_;
  std::size_t pos_ = 0;
};

}  // namespace macsim::testing
