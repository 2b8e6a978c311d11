#pragma once

// Counter-based random streams.
//
// Every stream is a Philox4x32-10 keyed by a 64-bit value. A replica stream is
// derived from (master seed, replica id) by mixing the id into the key:
//
//   key = splitmix64(seed ^ splitmix64(id + 0x9E3779B97F4A7C15))
//
// The counter starts at zero for every stream, so the draws seen by replica i
// depend only on (seed, i) and never on which worker ran it.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace lcoal {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// One Philox4x32 block function with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Seeded random stream. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key = 0) : key_(key) {}

  /// Independent stream for replica `id` under master seed `seed`.
  static Stream substream(std::uint64_t seed, std::uint64_t id) {
    return Stream(splitmix64(seed ^ splitmix64(id + 0x9E3779B97F4A7C15ULL)));
  }

  std::uint64_t key() const { return key_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return block_[used_++];
  }

  result_type operator()() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard exponential via inversion.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(counter_),
                                              static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(key_),
                                              static_cast<std::uint32_t>(key_ >> 32)};
    block_ = philox4x32_10(ctr, key);
    ++counter_;
    used_ = 0;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

}  // namespace lcoal
