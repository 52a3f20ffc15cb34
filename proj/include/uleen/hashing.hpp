#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "uleen/rng.hpp"

namespace uleen {

/// One member of the H3 family: n random m-bit words, one per input bit.
/// h(x) is the XOR of the words selected by the set bits of x, so the whole
/// function is linear over XOR and needs no arithmetic.
struct H3Params {
  uint32_t input_bits = 0;            // n, at most 64
  uint32_t output_bits = 0;           // m
  std::vector<uint32_t> table;        // n words, each < 2^m

  uint32_t hash(uint64_t x) const {
    uint32_t h = 0;
    while (x != 0) {
      h ^= table[std::countr_zero(x)];
      x &= x - 1;
    }
    return h;
  }
};

/// The k hash functions of one submodel. All filters in the submodel share
/// the bank, so hashes are computed once per input tuple and reused across
/// discriminators.
struct HashBank {
  uint64_t seed = 0;
  uint32_t input_bits = 0;
  uint32_t output_bits = 0;
  std::vector<H3Params> functions;  // k entries

  /// Deterministic in seed: one SplitMix64 stream, tables filled function by
  /// function, each word = next() masked to m bits.
  static HashBank generate(uint64_t seed, uint32_t input_bits,
                           uint32_t output_bits, uint32_t hash_count);

  uint32_t hash_count() const { return static_cast<uint32_t>(functions.size()); }
};

}  // namespace uleen
