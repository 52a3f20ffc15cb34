#include "uleen/hashing.hpp"

#include <stdexcept>

namespace uleen {

HashBank HashBank::generate(uint64_t seed, uint32_t input_bits,
                            uint32_t output_bits, uint32_t hash_count) {
  if (input_bits == 0 || input_bits > 64) {
    throw std::invalid_argument("hash bank: input bits must be in [1, 64]");
  }
  if (output_bits == 0 || output_bits > 31) {
    throw std::invalid_argument("hash bank: output bits must be in [1, 31]");
  }
  if (hash_count == 0) {
    throw std::invalid_argument("hash bank: need at least one hash function");
  }
  HashBank bank;
  bank.seed = seed;
  bank.input_bits = input_bits;
  bank.output_bits = output_bits;
  bank.functions.reserve(hash_count);

  SplitMix64 rng(seed);
  const uint32_t mask = (uint32_t{1} << output_bits) - 1;
  for (uint32_t f = 0; f < hash_count; ++f) {
    H3Params params;
    params.input_bits = input_bits;
    params.output_bits = output_bits;
    params.table.resize(input_bits);
    for (uint32_t i = 0; i < input_bits; ++i) {
      params.table[i] = static_cast<uint32_t>(rng.next()) & mask;
    }
    bank.functions.push_back(std::move(params));
  }
  return bank;
}

}  // namespace uleen
