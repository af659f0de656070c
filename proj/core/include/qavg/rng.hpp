#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace qavg {

/// Mixes a master seed with a stream index into a well-spread 64-bit seed
/// (two rounds of the splitmix64 finalizer). Distinct indices give
/// unrelated streams, so trial results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/**
 * Seeded random stream owned by a single trial or simulation.
 *
 * Satisfies UniformRandomBitGenerator so it can drive std distributions,
 * but the helpers below are preferred: they use fixed bit recipes and give
 * the same numbers on every standard library.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed);

  /// Stream for trial `index` of an experiment seeded with `master`.
  static RandomStream for_trial(std::uint64_t master, std::uint64_t index) {
    return RandomStream(derive_seed(master, index));
  }

  static constexpr result_type min() { return std::numeric_limits<result_type>::min(); }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform draw on the open interval (0, 1) with 53 random bits.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw (Marsaglia polar method).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qavg
