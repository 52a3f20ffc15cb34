#include "uleen/filters.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace uleen {

namespace {

// Deduplicates addressed slots in place (k is tiny, quadratic is fine).
size_t unique_indices(std::span<const uint32_t> indices, uint32_t* out) {
  size_t n = 0;
  for (uint32_t i : indices) {
    bool seen = false;
    for (size_t j = 0; j < n; ++j) {
      if (out[j] == i) {
        seen = true;
        break;
      }
    }
    if (!seen) out[n++] = i;
  }
  return n;
}

}  // namespace

void CountingFilter::add(std::span<const uint32_t> indices) {
  if (indices.empty()) throw std::invalid_argument("add: no indices");
  uint32_t slots[64];
  if (indices.size() > std::size(slots)) {
    throw std::invalid_argument("add: too many probes");
  }
  const size_t n = unique_indices(indices, slots);

  uint32_t min_v = counter(slots[0]);
  for (size_t j = 1; j < n; ++j) min_v = std::min(min_v, counter(slots[j]));

  if (!wide_mode_ && min_v + 1 > std::numeric_limits<uint16_t>::max()) {
    widen();
  }
  for (size_t j = 0; j < n; ++j) {
    const size_t i = slots[j];
    if (counter(i) == min_v) {
      if (wide_mode_) {
        ++wide_[i];
      } else {
        ++narrow_[i];
      }
    }
  }
}

uint32_t CountingFilter::min_counter(std::span<const uint32_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("min_counter: no indices");
  uint32_t min_v = counter(indices[0]);
  for (size_t j = 1; j < indices.size(); ++j) {
    min_v = std::min(min_v, counter(indices[j]));
  }
  return min_v;
}

void CountingFilter::set_counter(size_t i, uint32_t value) {
  if (!wide_mode_ && value > std::numeric_limits<uint16_t>::max()) widen();
  if (wide_mode_) {
    wide_[i] = value;
  } else {
    narrow_[i] = static_cast<uint16_t>(value);
  }
}

uint32_t CountingFilter::max_counter() const {
  uint32_t max_v = 0;
  if (wide_mode_) {
    for (uint32_t c : wide_) max_v = std::max(max_v, c);
  } else {
    for (uint16_t c : narrow_) max_v = std::max(max_v, uint32_t{c});
  }
  return max_v;
}

BinaryFilter CountingFilter::binarize(uint32_t threshold) const {
  BinaryFilter out(entries());
  for (size_t i = 0; i < entries(); ++i) {
    if (counter(i) >= threshold) out.set_bit(i, true);
  }
  return out;
}

void CountingFilter::widen() {
  wide_.assign(narrow_.begin(), narrow_.end());
  narrow_.clear();
  narrow_.shrink_to_fit();
  wide_mode_ = true;
}

}  // namespace uleen
