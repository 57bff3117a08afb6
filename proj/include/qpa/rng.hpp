#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace qpa {

// Counter-style generator with a tiny, fully specified state transition.
// Every stream in this project is seeded from (top-level seed, purpose,
// counters), so results do not depend on call scheduling or on the standard
// library's distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Modulo bias is irrelevant at the group sizes used here;
  // determinism is what matters.
  uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  uint64_t state_;
};

// 64-bit FNV-1a, optionally keyed. Used for feature hashing and seed
// derivation; never std::hash, whose value is implementation-defined.
inline uint64_t fnv1a64(std::string_view s, uint64_t seed = 0) {
  uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Order-sensitive combiner for deriving per-stream seeds.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  SplitMix64 g(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
  return g.next();
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Fisher-Yates keyed by an explicit seed.
template <typename T>
void seeded_shuffle(std::vector<T>& items, uint64_t seed) {
  SplitMix64 g(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(g.next_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace qpa
