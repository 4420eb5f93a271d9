#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "macsim/protocol.hpp"

namespace macsim {

/// Smallest m >= 0 with 2^m >= x.
inline int ceil_log2(std::uint64_t x) {
  if (x <= 1) return 0;
  return std::bit_width(x - 1);
}

/// Exact rational in (0, 1), parsed from strings like "1/16". Keeping the
/// error budget as a fraction makes ceil(log2(1/eps)) unambiguous.
struct Fraction {
  std::uint64_t num = 1;
  std::uint64_t den = 2;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  /// Smallest m with 2^m * num >= den, i.e. ceil(log2(den/num)).
  int ceil_log2_inverse() const {
    int m = 0;
    std::uint64_t lhs = num;
    while (lhs < den) {
      if (m >= 63) throw ConfigError("epsilon too small: 1/" + std::to_string(den));
      lhs <<= 1;
      ++m;
    }
    return m;
  }

  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  static Fraction parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos)
      throw ConfigError("epsilon must be a fraction like \"1/16\", got \"" + text + "\"");
    std::uint64_t n = 0, d = 0;
    try {
      n = std::stoull(text.substr(0, slash));
      d = std::stoull(text.substr(slash + 1));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse fraction \"" + text + "\"");
    }
    if (n == 0 || d == 0 || n >= d)
      throw ConfigError("epsilon must lie strictly in (0, 1), got \"" + text + "\"");
    return Fraction{n, d};
  }
};

}  // namespace macsim
