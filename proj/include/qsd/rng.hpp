// Counter-based random number generation (Philox4x32-10).
//
// Every random quantity in the library is a pure function of
// (master_seed, stream_index, step, channel), so trajectories are
// reproducible independent of thread count and evaluation order.
// Stream indices identify Monte Carlo trajectories; steps index time
// cells; the channel word carries a small purpose tag in its high byte
// so that Gaussian increments and outcome uniforms never collide.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace qsd::rng {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// One 128-bit Philox4x32-10 block.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    detail::philox_round(counter, key);
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
  return counter;
}

/// Purpose tags keep independent uses of the same (stream, step) apart.
enum class Purpose : std::uint32_t {
  gaussian = 0,
  outcome = 1,
  scratch = 2,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed), stream_index_(stream_index) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  /// Two independent N(0,1) variates for (step, channel).
  std::pair<double, double> normal_pair(std::uint64_t step, std::uint32_t channel,
                                        Purpose purpose = Purpose::gaussian) const {
    const auto words = block(step, channel, purpose);
    const double u1 = to_unit_open(join(words[0], words[1]));   // (0,1]
    const double u2 = to_unit_closed(join(words[2], words[3])); // [0,1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  /// Uniform variate in [0,1) for (step, channel).
  double uniform(std::uint64_t step, std::uint32_t channel,
                 Purpose purpose = Purpose::outcome) const {
    const auto words = block(step, channel, purpose);
    return to_unit_closed(join(words[0], words[1]));
  }

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint32_t channel,
                                     Purpose purpose) const {
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(master_seed_),
        static_cast<std::uint32_t>(master_seed_ >> 32)};
    // 24 bits of channel are plenty at desk scale; the top byte is the tag.
    const std::uint32_t tagged =
        (static_cast<std::uint32_t>(purpose) << 24) | (channel & 0x00FFFFFFu);
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(stream_index_),
        static_cast<std::uint32_t>(stream_index_ >> 32),
        static_cast<std::uint32_t>(step),
        tagged ^ (static_cast<std::uint32_t>(step >> 32) << 8)};
    return philox4x32(counter, key);
  }

  static std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<std::uint64_t>(hi) << 32 | lo;
  }

  // 53-bit mantissa mappings; the +1 keeps log() away from zero.
  static double to_unit_open(std::uint64_t x) {
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
  }
  static double to_unit_closed(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
};

}  // namespace qsd::rng
