#pragma once
#include <cstdint>
#include <string_view>

namespace xtalk {

// Deterministic RNG with portable output. std::uniform_real_distribution is
// implementation-defined, so all draws go through these helpers.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [0, n), n > 0
  uint64_t uniform_idx(uint64_t n) {
    return uint64_t((__uint128_t(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return next_double() < p; }

private:
  uint64_t state_;
};

inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Child seed derivation: independent streams keyed by (parent seed, tag, index).
inline uint64_t derive_seed(uint64_t parent, std::string_view tag, uint64_t index = 0) {
  uint64_t h = fnv1a(tag, parent ^ 0xcbf29ce484222325ull);
  h ^= index + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  Rng r(h);
  return r.next_u64();
}

} // namespace xtalk
