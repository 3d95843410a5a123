#pragma once

#include <cstdint>

namespace coinsensus {

// SplitMix64: used both as a stream generator and to derive independent
// sub-seeds, so coin draws never depend on scheduler consumption.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound).
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  bool next_bit() { return next() & 1ull; }
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  SplitMix64 g(seed ^ (0x1234567890abcdefull * (stream + 1)));
  g.next();
  std::uint64_t s = g.next() ^ (index * 0x2545f4914f6cdd1dull);
  SplitMix64 h(s);
  return h.next();
}

}  // namespace coinsensus
