#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace uleen {

/// SplitMix64 (Steele/Lea/Vigna). Model files store seeds instead of the
/// tables derived from them, which makes this generator part of the on-disk
/// contract: the algorithm below must never change. Reference outputs for
/// seed 0: e220a8397b1dcdaf, 6e789e6aa1b965f4, 06c45d188009454f.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound) by modulo reduction. The bias is below 2^-40 for
  /// every bound used here (permutation sizes, batch shuffles).
  uint64_t next_below(uint64_t bound) { return next() % bound; }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [-1, 1).
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

 private:
  uint64_t state_;
};

/// Role constants XORed into the master seed so that each stochastic
/// subsystem draws from its own stream. Also part of the file contract.
namespace seed_role {
inline constexpr uint64_t kMapping = 0x6d61702d7065726dull;
inline constexpr uint64_t kHash = 0x68332d7461626c65ull;
inline constexpr uint64_t kInit = 0x696e69742d756e69ull;
inline constexpr uint64_t kDropout = 0x64726f702d6d736bull;
inline constexpr uint64_t kShuffle = 0x73687566666c652dull;
inline constexpr uint64_t kSplit = 0x73706c69742d7467ull;
}  // namespace seed_role

/// index-th output of the stream seeded with (seed XOR role). Gives every
/// submodel its own stored mapping/hash seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t role, uint64_t index = 0) {
  SplitMix64 rng(seed ^ role);
  for (uint64_t i = 0; i < index; ++i) rng.next();
  return rng.next();
}

/// Fisher-Yates, walking from the highest index down to 1.
template <typename T>
void shuffle(std::vector<T>& values, SplitMix64& rng) {
  for (size_t i = values.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

inline std::vector<uint32_t> random_permutation(size_t size, uint64_t seed) {
  std::vector<uint32_t> perm(size);
  std::iota(perm.begin(), perm.end(), 0u);
  SplitMix64 rng(seed);
  shuffle(perm, rng);
  return perm;
}

}  // namespace uleen
