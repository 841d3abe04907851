#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <type_traits>

namespace fastrl {

/// xoshiro256** (Blackman & Vigna) seeded through SplitMix64.
///
/// Streams:
///   * state = four consecutive SplitMix64 outputs starting from `seed`.
///   * split(i) is a fresh generator seeded with
///       seed XOR splitmix64_mix((i + 1) * 0x9E3779B97F4A7C15)
///     i.e. the index is scrambled by the golden-ratio increment and the
///     SplitMix64 finalizer before being folded into the parent seed.
///     Splitting depends only on the parent seed, never on how far the parent
///     has advanced.
///   * uniform<float>() uses the top 24 bits, uniform<double>() the top 53,
///     so results lie in [0, 1) exactly.
///   * gaussian() uses the Marsaglia polar method in double precision and
///     caches the second variate of each accepted pair.
class Prng {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256**/splitmix64";
  static constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

  constexpr explicit Prng(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  static constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += kGoldenGamma;
    return splitmix64_mix(state);
  }

  constexpr std::uint64_t seed() const { return seed_; }
  constexpr const std::array<std::uint64_t, 4>& state() const { return state_; }

  constexpr Prng split(std::uint64_t index) const {
    return Prng(seed_ ^ splitmix64_mix((index + 1) * kGoldenGamma));
  }

  constexpr std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  template <typename T = double>
  constexpr T uniform() {
    if constexpr (std::is_same_v<T, float>) {
      return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    } else {
      return static_cast<T>(static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
    }
  }

  /// Uniform in [lo, hi).
  template <typename T = double>
  constexpr T uniform(T lo, T hi) {
    return lo + (hi - lo) * uniform<T>();
  }

  /// Unbiased integer in [0, n), Lemire's multiply-and-reject. n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    __uint128_t product = static_cast<__uint128_t>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        product = static_cast<__uint128_t>(next_u64()) * n;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  /// Standard normal variate.
  template <typename T = double>
  T gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return static_cast<T>(spare_);
    }
    double u = 0;
    double v = 0;
    double s = 0;
    do {
      u = 2.0 * uniform<double>() - 1.0;
      v = 2.0 * uniform<double>() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return static_cast<T>(u * scale);
  }

  friend constexpr bool operator==(const Prng&, const Prng&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fastrl
