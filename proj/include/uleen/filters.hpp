#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uleen/rng.hpp"

namespace uleen {

/// Bloom filter used for inference: 2^m bits, responds 1 iff every addressed
/// bit is set.
class BinaryFilter {
 public:
  BinaryFilter() = default;
  explicit BinaryFilter(size_t entries)
      : entries_(entries), words_((entries + 63) / 64, 0) {}

  size_t entries() const { return entries_; }

  bool bit(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

  void set_bit(size_t i, bool value) {
    uint64_t mask = uint64_t{1} << (i & 63);
    if (value) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }

  bool query(std::span<const uint32_t> indices) const {
    for (uint32_t i : indices) {
      if (!bit(i)) return false;
    }
    return true;
  }

  std::vector<uint64_t>& words() { return words_; }
  const std::vector<uint64_t>& words() const { return words_; }

 private:
  size_t entries_ = 0;
  std::vector<uint64_t> words_;
};

/// Counting Bloom filter used by one-shot training. Counters start at 16
/// bits and the whole table widens to 32 bits before any counter would
/// overflow; counts are never silently saturated.
class CountingFilter {
 public:
  CountingFilter() = default;
  explicit CountingFilter(size_t entries) : narrow_(entries, 0) {}

  size_t entries() const { return wide_mode_ ? wide_.size() : narrow_.size(); }

  /// Min-increment update: every addressed counter equal to the smallest
  /// addressed value is incremented by one. Duplicate indices (hash
  /// collisions within the bank) address one slot and count once.
  void add(std::span<const uint32_t> indices);

  /// 1 iff the smallest addressed counter is >= threshold.
  bool query(std::span<const uint32_t> indices, uint32_t threshold) const {
    return min_counter(indices) >= threshold;
  }

  uint32_t min_counter(std::span<const uint32_t> indices) const;

  uint32_t counter(size_t i) const {
    return wide_mode_ ? wide_[i] : narrow_[i];
  }
  void set_counter(size_t i, uint32_t value);

  uint32_t max_counter() const;

  /// entry_i = (counter_i >= threshold); query equivalence with the counting
  /// filter at that threshold holds pointwise.
  BinaryFilter binarize(uint32_t threshold) const;

  bool widened() const { return wide_mode_; }

 private:
  std::vector<uint16_t> narrow_;
  std::vector<uint32_t> wide_;
  bool wide_mode_ = false;

  void widen();
};

/// Bloom filter with real-valued entries in [-1, 1], trained by gradient
/// descent. The forward output is the unit step of the smallest addressed
/// entry (f(0) = 1); the argmin positions are reported for the backward
/// pass.
class ContinuousFilter {
 public:
  ContinuousFilter() = default;
  explicit ContinuousFilter(size_t entries) : values_(entries, 0.0) {}

  size_t entries() const { return values_.size(); }

  void init_uniform(SplitMix64& rng) {
    for (double& v : values_) v = rng.next_symmetric();
  }

  struct Forward {
    bool bit = false;        // step(min value)
    double min_value = 0.0;
    uint32_t argmin_mask = 0;  // bit j set iff indices[j] attains the minimum
  };

  Forward forward(std::span<const uint32_t> indices) const {
    Forward out;
    out.min_value = values_[indices[0]];
    for (size_t j = 1; j < indices.size(); ++j) {
      const double v = values_[indices[j]];
      if (v < out.min_value) out.min_value = v;
    }
    for (size_t j = 0; j < indices.size(); ++j) {
      if (values_[indices[j]] == out.min_value) {
        out.argmin_mask |= uint32_t{1} << j;
      }
    }
    out.bit = out.min_value >= 0.0;
    return out;
  }

  double value(size_t i) const { return values_[i]; }
  void set_value(size_t i, double v) { values_[i] = v; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// entry_i = (value_i >= 0), the unit step applied to the table.
  BinaryFilter binarize() const {
    BinaryFilter out(values_.size());
    for (size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] >= 0.0) out.set_bit(i, true);
    }
    return out;
  }

 private:
  std::vector<double> values_;
};

}  // namespace uleen
