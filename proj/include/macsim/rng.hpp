#pragma once

#include <cstdint>
#include <vector>

namespace macsim {

/// Source of protocol randomness. All coin probabilities used by the
/// shipped algorithms are dyadic, so the interface is built from raw
/// 64-bit draws; one decision consumes exactly one draw, which keeps
/// replays and scripted test sources simple.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual std::uint64_t next_u64() = 0;

  /// Fair coin.
  bool bit() { return (next_u64() >> 63) != 0; }

  /// True with probability exactly 2^-e (e clamped to [0, 63]).
  bool bernoulli_pow2(int e) {
    std::uint64_t x = next_u64();
    if (e <= 0) return true;
    if (e > 63) e = 63;
    return (x >> (64 - e)) == 0;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Default generator: splitmix64 stream over an incrementing state.
class SplitMix64 final : public RandomSource {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() override {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Derives the per-process, per-trial stream seed from one root seed:
///   s = mix(mix(root ^ (trial+1) * C1) ^ (pid+1) * C2)
/// with mix = splitmix64 finalizer. Streams are independent of scheduling
/// order, so a trial replays identically regardless of worker threads.
inline std::uint64_t stream_seed(std::uint64_t root, std::uint64_t trial, int pid) {
  std::uint64_t t = splitmix64(root ^ (trial + 1) * 0xd6e8feb86659fd93ULL);
  return splitmix64(t ^ (static_cast<std::uint64_t>(pid) + 1) * 0xa3b195354a39b70dULL);
}

/// Test helper: replays a fixed list of draws, then falls back to a
/// deterministic tail so accidental over-consumption is visible but safe.
class ScriptedSource final : public RandomSource {
 public:
  explicit ScriptedSource(std::vector<std::uint64_t> draws)
      : draws_(std::move(draws)) {}

  /// Convenience: script a sequence of fair-coin outcomes.
  static ScriptedSource coins(const std::vector<bool>& bits) {
    std::vector<std::uint64_t> d;
    d.reserve(bits.size());
    for (bool b : bits) d.push_back(b ? ~0ULL : 0ULL);
    return ScriptedSource(std::move(d));
  }

  std::uint64_t next_u64() override {
    if (pos_ < draws_.size()) return draws_[pos_++];
    ++overruns_;
    return splitmix64(0xfeedULL + overruns_);
  }

  std::size_t consumed() const { return pos_; }
  std::size_t overruns() const { return overruns_; }

 private:
  std::vector<std::uint64_t> draws_;
  std::size_t pos_ = 0;
  std::size_t overruns_ = 0;
};

}  // namespace macsim
