#pragma once

#include <cstdint>
#include <random>

namespace optran {

/// Seeded generator with hand-rolled uniform draws. std::uniform_*
/// distributions are implementation-defined, which would break byte-identical
/// scenario generation across standard libraries; mt19937_64 itself is fully
/// specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_u64() { return eng_(); }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace optran
