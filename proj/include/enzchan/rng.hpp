#pragma once
// Deterministic random streams for the particle simulator and sequence
// sampling. xoshiro256++ supplies uniform 64-bit words; standard normals
// come from a 128-layer ziggurat (Marsaglia & Tsang 2000, constants from
// Doornik's write-up). Both transforms are fixed here, instead of relying
// on std::normal_distribution, so that a (config, seed) pair reproduces
// the same trajectory on every standard library.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace enzchan {

// SplitMix64 step; used for seed expansion and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Sub-stream seed: hash of (master, index, salt). Trials, sequences and
// any other independent units each get their own stream through this.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::uint64_t salt = 0) {
  std::uint64_t s = master;
  std::uint64_t out = splitmix64(s);
  s = out ^ (index * 0xD1B54A32D192ED03ULL);
  out = splitmix64(s);
  s = out ^ (salt * 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(s);
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1), 53 significant bits.
  double uniform() {
    return static_cast<double>(static_cast<std::int64_t>(next_u64() >> 11)) * 0x1.0p-53;
  }

  // Uniform in (0,1); safe as a log() argument.
  double uniform_open() {
    return (static_cast<double>(static_cast<std::int64_t>(next_u64() >> 11)) + 0.5) *
           0x1.0p-53;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_;
};

// 128-layer ziggurat for the standard normal. One u64 per draw on the
// common path: bits 0-6 select the layer, bit 7 the sign, bits 11-63 the
// horizontal position. Layer edges satisfy the usual equal-area recursion
// with R = 3.442619855899, V = 9.91256303526217e-3.
class ZigguratNormal {
 public:
  ZigguratNormal() {
    double f = std::exp(-0.5 * kR * kR);
    x_[0] = kV / f;  // pseudo-width of the base strip (tail included)
    x_[1] = kR;
    x_[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x_[i] = std::sqrt(-2.0 * std::log(kV / x_[i - 1] + f));
      f = std::exp(-0.5 * x_[i] * x_[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio_[i] = x_[i + 1] / x_[i];
  }

  template <class Rng>
  double operator()(Rng& rng) const {
    for (;;) {
      const std::uint64_t bits = rng.next_u64();
      const int i = static_cast<int>(bits & 0x7F);
      // bit 7 becomes the sign; applied by XOR so the random sign costs no
      // branch. bits >> 11 fits in a signed 64-bit, keeping the int-to-
      // double conversion cheap.
      const std::uint64_t sign = (bits & 0x80) << 56;
      const double u =
          static_cast<double>(static_cast<std::int64_t>(bits >> 11)) * 0x1.0p-53;
      if (u < ratio_[i])
        return std::bit_cast<double>(std::bit_cast<std::uint64_t>(u * x_[i]) ^ sign);
      if (i == 0) {
        // Base strip miss: sample the tail beyond R (Marsaglia's method).
        double xx, yy;
        do {
          xx = std::log(rng.uniform_open()) / kR;
          yy = std::log(rng.uniform_open());
        } while (-2.0 * yy < xx * xx);
        return sign ? xx - kR : kR - xx;
      }
      const double ax = u * x_[i];
      const double f0 = std::exp(-0.5 * (x_[i] * x_[i] - ax * ax));
      const double f1 = std::exp(-0.5 * (x_[i + 1] * x_[i + 1] - ax * ax));
      if (f1 + rng.uniform() * (f0 - f1) < 1.0)
        return std::bit_cast<double>(std::bit_cast<std::uint64_t>(ax) ^ sign);
    }
  }

  static const ZigguratNormal& instance() {
    static const ZigguratNormal z;
    return z;
  }

 private:
  static constexpr int kLayers = 128;
  static constexpr double kR = 3.442619855899;
  static constexpr double kV = 9.91256303526217e-3;
  std::array<double, kLayers + 1> x_{};
  std::array<double, kLayers> ratio_{};
};

}  // namespace enzchan
