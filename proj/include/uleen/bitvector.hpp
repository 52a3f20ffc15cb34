#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace uleen {

/// Fixed-length packed bit vector, LSB-first within each 64-bit word.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  size_t size() const { return size_; }

  bool get(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  void set(size_t i, bool value) {
    uint64_t mask = uint64_t{1} << (i & 63);
    if (value) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }

  void clear() {
    for (auto& w : words_) w = 0;
  }

  size_t count() const {
    size_t total = 0;
    for (uint64_t w : words_) total += std::popcount(w);
    return total;
  }

  bool operator==(const BitVector& other) const = default;

  const std::vector<uint64_t>& words() const { return words_; }

 private:
  size_t size_ = 0;
  std::vector<uint64_t> words_;
};

}  // namespace uleen
