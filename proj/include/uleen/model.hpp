#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uleen/bitvector.hpp"
#include "uleen/encoding.hpp"
#include "uleen/filters.hpp"
#include "uleen/hashing.hpp"
#include "uleen/rng.hpp"

namespace uleen {

/// Pseudo-random reordering of the encoded input, shared by all
/// discriminators of a submodel. The permutation covers pad_to = N*n
/// positions; positions at or beyond the encoded width are padding and read
/// as constant 0.
class InputMapping {
 public:
  InputMapping() = default;

  static InputMapping generate(size_t encoded_bits, uint32_t inputs_per_filter,
                               uint64_t seed);

  size_t encoded_bits() const { return encoded_bits_; }
  uint32_t inputs_per_filter() const { return n_; }
  size_t pad_to() const { return order_.size(); }
  size_t num_filters() const { return order_.size() / n_; }
  uint64_t seed() const { return seed_; }

  /// Source position feeding tuple bit j of the given filter.
  uint32_t source(size_t filter, uint32_t j) const {
    return order_[filter * n_ + j];
  }

  /// n-bit input tuple of one filter; bit j reads source(filter, j).
  /// `words` is the packed LSB-first bit buffer of one encoded sample.
  uint64_t tuple_words(const uint64_t* words, size_t filter) const {
    uint64_t value = 0;
    const uint32_t* src = order_.data() + filter * n_;
    for (uint32_t j = 0; j < n_; ++j) {
      const uint32_t s = src[j];
      if (s < encoded_bits_ && ((words[s >> 6] >> (s & 63)) & 1u)) {
        value |= uint64_t{1} << j;
      }
    }
    return value;
  }

  uint64_t tuple(const BitVector& encoded, size_t filter) const {
    return tuple_words(encoded.words().data(), filter);
  }

  const std::vector<uint32_t>& order() const { return order_; }

 private:
  size_t encoded_bits_ = 0;
  uint32_t n_ = 0;
  uint64_t seed_ = 0;
  std::vector<uint32_t> order_;
};

template <typename FilterT>
struct Discriminator {
  std::vector<FilterT> filters;
  BitVector kept;  // 1 = kept; pruned filters stay in memory but are skipped
  int32_t bias = 0;

  size_t kept_count() const { return kept.count(); }
};

template <typename FilterT>
struct Submodel {
  InputMapping mapping;
  HashBank bank;
  std::vector<Discriminator<FilterT>> discriminators;

  size_t num_filters() const { return mapping.num_filters(); }
  uint32_t hash_count() const { return bank.hash_count(); }
  size_t entries_per_filter() const { return size_t{1} << bank.output_bits; }

  /// Hash indices of every filter for one encoded sample, filter-major:
  /// probes[f*k + h] = hash_h applied to filter f's input tuple. Computed
  /// once per sample and shared by all discriminators.
  void compute_probes_words(const uint64_t* words, uint32_t* probes) const {
    const size_t n_filters = num_filters();
    const uint32_t k = bank.hash_count();
    for (size_t f = 0; f < n_filters; ++f) {
      const uint64_t t = mapping.tuple_words(words, f);
      for (uint32_t h = 0; h < k; ++h) {
        probes[f * k + h] = bank.functions[h].hash(t);
      }
    }
  }

  void compute_probes(const BitVector& encoded,
                      std::vector<uint32_t>& probes) const {
    probes.resize(num_filters() * bank.hash_count());
    compute_probes_words(encoded.words().data(), probes.data());
  }
};

template <typename FilterT>
struct Ensemble {
  ThermometerEncoder encoder;
  std::vector<Submodel<FilterT>> submodels;
  std::vector<std::string> class_names;
  uint64_t seed = 0;

  size_t num_classes() const { return class_names.size(); }
  size_t num_submodels() const { return submodels.size(); }
  size_t encoded_bits() const { return encoder.encoded_width(); }
};

using BinaryEnsemble = Ensemble<BinaryFilter>;
using CountingEnsemble = Ensemble<CountingFilter>;
using ContinuousEnsemble = Ensemble<ContinuousFilter>;

/// bias + number of kept filters whose k addressed bits are all set.
inline int64_t discriminator_response(const Discriminator<BinaryFilter>& disc,
                                      std::span<const uint32_t> probes,
                                      uint32_t k) {
  int64_t sum = disc.bias;
  for (size_t f = 0; f < disc.filters.size(); ++f) {
    if (!disc.kept.get(f)) continue;
    if (disc.filters[f].query(probes.subspan(f * k, k))) ++sum;
  }
  return sum;
}

/// Counting variant, thresholded at the given bleach value.
inline int64_t discriminator_response(const Discriminator<CountingFilter>& disc,
                                      std::span<const uint32_t> probes,
                                      uint32_t k, uint32_t bleach) {
  int64_t sum = disc.bias;
  for (size_t f = 0; f < disc.filters.size(); ++f) {
    if (!disc.kept.get(f)) continue;
    if (disc.filters[f].query(probes.subspan(f * k, k), bleach)) ++sum;
  }
  return sum;
}

/// Continuous variant: unit step of each kept filter's minimum entry.
inline int64_t discriminator_response(
    const Discriminator<ContinuousFilter>& disc,
    std::span<const uint32_t> probes, uint32_t k) {
  int64_t sum = disc.bias;
  for (size_t f = 0; f < disc.filters.size(); ++f) {
    if (!disc.kept.get(f)) continue;
    if (disc.filters[f].forward(probes.subspan(f * k, k)).bit) ++sum;
  }
  return sum;
}

struct Prediction {
  size_t label = 0;
  std::vector<int64_t> responses;  // one per class, summed over submodels
};

/// Argmax with ties broken toward the lowest class index.
size_t argmax_lowest(std::span<const int64_t> responses);

Prediction predict_encoded(const BinaryEnsemble& model,
                           const BitVector& encoded);
Prediction predict_encoded(const CountingEnsemble& model,
                           const BitVector& encoded, uint32_t bleach);
Prediction predict_encoded(const ContinuousEnsemble& model,
                           const BitVector& encoded);
Prediction predict(const BinaryEnsemble& model, std::span<const double> raw);

/// Size of the binary inference representation: kept filters times entries,
/// over every discriminator of every submodel. Biases and metadata excluded.
template <typename FilterT>
uint64_t model_size_bits(const Ensemble<FilterT>& model) {
  uint64_t total = 0;
  for (const auto& sm : model.submodels) {
    const uint64_t entries = sm.entries_per_filter();
    for (const auto& d : sm.discriminators) {
      total += static_cast<uint64_t>(d.kept_count()) * entries;
    }
  }
  return total;
}

struct SubmodelGeometry {
  uint32_t inputs_per_filter = 0;  // n
  uint32_t entries_log2 = 0;       // table size = 2^entries_log2
  uint32_t hash_count = 0;         // k
};

struct ModelConfig {
  uint32_t bits_per_input = 1;  // t, shared across submodels
  EncoderMode encoder_mode = EncoderMode::kGaussian;
  std::vector<SubmodelGeometry> submodels;
};

/// Throws std::invalid_argument on bad geometry (t = 0, no submodels,
/// n outside [1,64], entries outside [2^1, 2^31], k = 0).
void validate(const ModelConfig& config);

/// Deterministic in seed; every filter table zeroed.
CountingEnsemble build_counting(const ModelConfig& config,
                                ThermometerEncoder encoder,
                                std::vector<std::string> class_names,
                                uint64_t seed);

/// Deterministic in seed; every filter entry initialized U(-1, 1).
ContinuousEnsemble build_continuous(const ModelConfig& config,
                                    ThermometerEncoder encoder,
                                    std::vector<std::string> class_names,
                                    uint64_t seed);

}  // namespace uleen
