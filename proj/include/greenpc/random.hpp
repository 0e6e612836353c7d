#pragma once

#include <cstdint>
#include <random>

namespace greenpc {

// mt19937_64 output is fixed by the standard; the conversions below are
// written out so streams are reproducible across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
  }

  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

}  // namespace greenpc
