#pragma once

// Counter-based random streams. A stream is addressed by (seed, realization, subsystem);
// draws are a pure function of that address and the draw position, so realizations can
// be simulated in any order on any number of workers with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

#include "dkfd/grid.hpp"

namespace dkfd {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent noise sources of one realization.
enum class Subsystem : std::uint64_t {
  particles = 1,
  dk_noise = 2,
  noise_check = 3,
};

class RandomStream {
public:
  RandomStream(std::uint64_t seed, std::uint64_t realization, Subsystem subsystem) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(subsystem)));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    realization_ = realization;
  }

  /// Next uniform in the open interval (0, 1) with 53 random bits.
  double uniform() {
    if (cursor_ >= 2) refill();
    return uniforms_[cursor_++];
  }

  /// Standard normal via Box-Muller; both variates of each pair are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = kTwoPi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  void fill_normal(std::span<double> out, double stddev = 1.0) {
    for (double& v : out) v = stddev * normal();
  }

  std::uint64_t blocks_consumed() const { return block_; }

private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(realization_),
                                  static_cast<std::uint32_t>(realization_ >> 32)};
    const auto r = Philox4x32::generate(ctr, key_);
    ++block_;
    for (int i = 0; i < 2; ++i) {
      const std::uint64_t bits = (static_cast<std::uint64_t>(r[2 * i]) << 32) | r[2 * i + 1];
      uniforms_[i] = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }
    cursor_ = 0;
  }

  Philox4x32::Key key_{};
  std::uint64_t realization_ = 0;
  std::uint64_t block_ = 0;
  std::array<double, 2> uniforms_{};
  int cursor_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dkfd
