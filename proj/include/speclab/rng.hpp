#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace speclab {

// Version tag stored with every weight table. Bump it whenever the mapping
// from (seed, counter) to doubles changes.
inline constexpr std::string_view kGeneratorVersion = "philox4x32-10/u53/v1";

// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as easy
// as 1, 2, 3"). Pure function of counter and key, so any draw can be
// recomputed independently of every other draw.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Top 53 bits of (hi:lo) scaled to [0,1).
inline double to_unit_interval(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform in [0,1) keyed by seed and addressed by four counter words.
double keyed_uniform(std::uint64_t seed, std::uint32_t c0, std::uint32_t c1,
                     std::uint32_t c2, std::uint32_t c3);

// Seed for replicate `index` of an experiment with base seed `base`.
std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index);

// Sequential stream over the Philox counter space. Used where a plain
// sequence of draws is needed (edge sampling, solver start vectors).
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t stream_id);

  std::uint64_t next_u64();
  double next_unit();
  // Unbiased integer in [0, bound), bound >= 1 (Lemire's method).
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace speclab
