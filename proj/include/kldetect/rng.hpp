#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace kldetect {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// xoshiro256++ seeded via splitmix64. Every randomized operation in the
// library draws from a stream derived from (seed, purpose, index), so
// parallel or reordered execution cannot change results.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  static Rng derive(uint64_t seed, std::string_view purpose, uint64_t index = 0) {
    // FNV-1a over the purpose tag, mixed with seed and index
    uint64_t h = 0xCBF29CE484222325ull;
    for (char c : purpose) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ull;
    }
    uint64_t sm = seed;
    uint64_t mixed = splitmix64(sm) ^ h;
    sm = mixed + 0x9E3779B97F4A7C15ull * (index + 1);
    return Rng(splitmix64(sm));
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0,n); n must be > 0
  size_t uniform_index(size_t n) {
    return static_cast<size_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // standard normal via Box-Muller, second draw cached
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (size_t i = values.size(); i > 1; --i) {
      size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// stable per-index key, used for hash-ordered splits and fold assignment
inline uint64_t index_hash(uint64_t seed, uint64_t index) {
  uint64_t sm = seed ^ (0x9E3779B97F4A7C15ull * (index + 1));
  return splitmix64(sm);
}

}  // namespace kldetect
