#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "macsim/rng.hpp"

namespace macsim {

struct WilsonInterval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const { return (hi - lo) / 2.0; }
};

/// Wilson score interval for a binomial proportion (z = 1.96 by default).
inline WilsonInterval wilson_interval(long long successes, long long trials,
                                      double z = 1.96) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  double lo = (centre - spread) / denom;
  double hi = (centre + spread) / denom;
  return {std::max(0.0, lo), std::min(1.0, hi)};
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double quantile_of(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double idx = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

inline double median_of(const std::vector<double>& xs) { return quantile_of(xs, 0.5); }

struct BootstrapCI {
  double lo = 0.0;
  double hi = 0.0;
};

/// Seeded percentile bootstrap (95%) for a statistic of a sample. Reported
/// alongside point estimates; never used to decide a test.
template <typename Stat>
inline BootstrapCI bootstrap_ci(const std::vector<double>& xs, Stat statistic,
                                std::uint64_t seed, int resamples = 1000) {
  if (xs.empty()) return {0.0, 0.0};
  SplitMix64 rng(splitmix64(seed ^ 0x626f6f74ULL));
  std::vector<double> stats;
  stats.reserve(resamples);
  std::vector<double> sample(xs.size());
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      sample[i] = xs[rng.next_u64() % xs.size()];
    stats.push_back(statistic(sample));
  }
  std::sort(stats.begin(), stats.end());
  return {quantile_of(stats, 0.025), quantile_of(stats, 0.975)};
}

}  // namespace macsim
