#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uleen/bitvector.hpp"
#include "uleen/matrix.hpp"

namespace uleen {

/// Inverse CDF of the standard normal distribution (Wichura's AS 241,
/// double-precision branch). Absolute error is far below the 1e-8 the
/// threshold tables require. p must lie in (0, 1).
double inverse_normal_cdf(double p);

struct FeatureStats {
  double mean = 0.0;
  double std = 0.0;  // population convention (1/N)
};

enum class EncoderMode : uint8_t { kGaussian = 0, kLinear = 1 };

std::string to_string(EncoderMode mode);
EncoderMode encoder_mode_from_string(const std::string& name);

/// Per-feature thermometer encoder. Each feature is compared against t
/// non-decreasing thresholds; bit i of its group is set iff value >=
/// threshold[i], so every group is a unary code. Gaussian mode places the
/// thresholds at the quantiles that split a fitted normal into t+1 regions
/// of equal probability; linear mode spaces them evenly between the observed
/// min and max, endpoints excluded.
class ThermometerEncoder {
 public:
  ThermometerEncoder() = default;

  static ThermometerEncoder fit(const Matrix& training_features,
                                uint32_t bits_per_input, EncoderMode mode);

  /// Fit on a subset of rows (e.g. the train split of a tagged dataset).
  static ThermometerEncoder fit(const Matrix& features,
                                std::span<const size_t> rows,
                                uint32_t bits_per_input, EncoderMode mode);

  /// Rebuild an encoder from stored thresholds (model loading).
  static ThermometerEncoder from_thresholds(uint32_t bits_per_input,
                                            EncoderMode mode,
                                            size_t num_features,
                                            std::vector<double> thresholds);

  BitVector encode(std::span<const double> sample) const;
  void encode_into(std::span<const double> sample, BitVector& out) const;

  /// Occupancy of the t+1 inter-threshold bins per feature. Bin j of feature
  /// f counts samples with thresholds[j-1] <= v < thresholds[j]; bin 0 is
  /// everything below the lowest threshold, bin t everything at or above the
  /// highest. Values equal to a threshold land in the upper bin, matching
  /// the >= rule used by encode().
  std::vector<std::vector<uint64_t>> quantile_bin_counts(
      const Matrix& features) const;

  uint32_t bits_per_input() const { return bits_per_input_; }
  EncoderMode mode() const { return mode_; }
  size_t num_features() const { return num_features_; }
  size_t encoded_width() const { return num_features_ * bits_per_input_; }

  /// Threshold i of feature f; thresholds are non-decreasing in i.
  double threshold(size_t feature, uint32_t i) const {
    return thresholds_[feature * bits_per_input_ + i];
  }
  const std::vector<double>& thresholds() const { return thresholds_; }
  const std::vector<FeatureStats>& stats() const { return stats_; }

 private:
  uint32_t bits_per_input_ = 0;
  EncoderMode mode_ = EncoderMode::kGaussian;
  size_t num_features_ = 0;
  std::vector<double> thresholds_;  // feature-major, num_features * t
  std::vector<FeatureStats> stats_;  // empty for loaded encoders
};

}  // namespace uleen
