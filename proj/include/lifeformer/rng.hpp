#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace lifeformer {

// Deterministic xoshiro256** generator. The standard library distributions
// are implementation-defined, so all uniform/normal draws are constructed
// here explicitly; every run artifact depends on this exact sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      word = splitmix64(x);
    }
  }

  std::uint64_t next_u64() {
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

  // Uniform double in [0,1) from the high 53 bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller with cached spare.
  double normal(double mu = 0.0, double sigma = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mu + spare_ * sigma;
    }
    const double two_pi = 6.283185307179586476925286766559;
    const double angle = uniform01() * two_pi;
    const double radius = std::sqrt(-2.0 * std::log(1.0 - uniform01()));
    spare_ = std::sin(angle) * radius;
    has_spare_ = true;
    return mu + std::cos(angle) * radius * sigma;
  }

  // Unbiased integer in [0, n) by rejection on the top bits.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) {
      return 0;
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) {
      x = next_u64();
    }
    return x % n;
  }

  template <class V>
  void shuffle(V& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent substream keyed by (original seed, key). Derivation depends
  // only on the construction seed, never on how many draws were consumed,
  // so per-sample streams are order-independent.
  Rng derive(std::uint64_t key) const {
    std::uint64_t x = seed_;
    const std::uint64_t a = splitmix64(x);
    std::uint64_t y = key ^ 0x9e3779b97f4a7c15ull;
    const std::uint64_t b = splitmix64(y);
    return Rng(a ^ rotl(b, 17));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lifeformer
