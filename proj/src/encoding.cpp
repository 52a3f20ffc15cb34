#include "uleen/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace uleen {

// AS 241 algorithm PPND16 (Wichura, 1988): rational approximations on the
// central region and two tail regions.
double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("inverse_normal_cdf: p must be in (0, 1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

std::string to_string(EncoderMode mode) {
  return mode == EncoderMode::kGaussian ? "gaussian" : "linear";
}

EncoderMode encoder_mode_from_string(const std::string& name) {
  if (name == "gaussian") return EncoderMode::kGaussian;
  if (name == "linear") return EncoderMode::kLinear;
  throw std::invalid_argument("unknown encoder mode: " + name);
}

ThermometerEncoder ThermometerEncoder::fit(const Matrix& training_features,
                                           uint32_t bits_per_input,
                                           EncoderMode mode) {
  std::vector<size_t> rows(training_features.rows);
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return fit(training_features, rows, bits_per_input, mode);
}

ThermometerEncoder ThermometerEncoder::fit(const Matrix& features_matrix,
                                           std::span<const size_t> rows,
                                           uint32_t bits_per_input,
                                           EncoderMode mode) {
  if (bits_per_input == 0) {
    throw std::invalid_argument("thermometer fit: bits_per_input must be >= 1");
  }
  if (rows.size() < 2) {
    throw std::invalid_argument("thermometer fit: need at least 2 samples");
  }
  const size_t features = features_matrix.cols;
  const size_t samples = rows.size();
  const uint32_t t = bits_per_input;

  ThermometerEncoder enc;
  enc.bits_per_input_ = t;
  enc.mode_ = mode;
  enc.num_features_ = features;
  enc.thresholds_.resize(features * t);
  enc.stats_.resize(features);

  for (size_t f = 0; f < features; ++f) {
    double sum = 0.0;
    double lo = features_matrix.at(rows[0], f);
    double hi = lo;
    for (size_t s : rows) {
      const double v = features_matrix.at(s, f);
      if (!std::isfinite(v)) {
        throw std::invalid_argument("thermometer fit: non-finite feature value");
      }
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / static_cast<double>(samples);
    double sq = 0.0;
    for (size_t s : rows) {
      const double d = features_matrix.at(s, f) - mean;
      sq += d * d;
    }
    const double std_dev = std::sqrt(sq / static_cast<double>(samples));
    enc.stats_[f] = {mean, std_dev};

    double* dst = enc.thresholds_.data() + f * t;
    if (mode == EncoderMode::kGaussian) {
      for (uint32_t i = 0; i < t; ++i) {
        const double p = static_cast<double>(i + 1) / static_cast<double>(t + 1);
        dst[i] = mean + std_dev * inverse_normal_cdf(p);
      }
    } else {
      const double step = (hi - lo) / static_cast<double>(t + 1);
      for (uint32_t i = 0; i < t; ++i) {
        dst[i] = lo + step * static_cast<double>(i + 1);
      }
    }
    // Guard against rounding producing a decreasing pair.
    for (uint32_t i = 1; i < t; ++i) {
      if (dst[i] < dst[i - 1]) dst[i] = dst[i - 1];
    }
  }
  return enc;
}

ThermometerEncoder ThermometerEncoder::from_thresholds(
    uint32_t bits_per_input, EncoderMode mode, size_t num_features,
    std::vector<double> thresholds) {
  if (thresholds.size() != num_features * bits_per_input) {
    throw std::invalid_argument("thermometer: threshold table size mismatch");
  }
  for (size_t f = 0; f < num_features; ++f) {
    for (uint32_t i = 1; i < bits_per_input; ++i) {
      if (thresholds[f * bits_per_input + i] <
          thresholds[f * bits_per_input + i - 1]) {
        throw std::invalid_argument("thermometer: thresholds must be non-decreasing");
      }
    }
  }
  ThermometerEncoder enc;
  enc.bits_per_input_ = bits_per_input;
  enc.mode_ = mode;
  enc.num_features_ = num_features;
  enc.thresholds_ = std::move(thresholds);
  return enc;
}

void ThermometerEncoder::encode_into(std::span<const double> sample,
                                     BitVector& out) const {
  if (sample.size() != num_features_) {
    throw std::invalid_argument("encode: sample has " +
                                std::to_string(sample.size()) +
                                " features, encoder expects " +
                                std::to_string(num_features_));
  }
  if (out.size() != encoded_width()) {
    out = BitVector(encoded_width());
  } else {
    out.clear();
  }
  const uint32_t t = bits_per_input_;
  for (size_t f = 0; f < num_features_; ++f) {
    const double v = sample[f];
    if (!std::isfinite(v)) {
      throw std::invalid_argument("encode: non-finite feature value");
    }
    const double* thr = thresholds_.data() + f * t;
    // Unary code: bits set from the lowest threshold upwards.
    for (uint32_t i = 0; i < t && v >= thr[i]; ++i) {
      out.set(f * t + i, true);
    }
  }
}

BitVector ThermometerEncoder::encode(std::span<const double> sample) const {
  BitVector out(encoded_width());
  encode_into(sample, out);
  return out;
}

std::vector<std::vector<uint64_t>> ThermometerEncoder::quantile_bin_counts(
    const Matrix& features) const {
  if (features.cols != num_features_) {
    throw std::invalid_argument("quantile_bin_counts: feature count mismatch");
  }
  const uint32_t t = bits_per_input_;
  std::vector<std::vector<uint64_t>> counts(
      num_features_, std::vector<uint64_t>(t + 1, 0));
  for (size_t s = 0; s < features.rows; ++s) {
    for (size_t f = 0; f < num_features_; ++f) {
      const double v = features.at(s, f);
      const double* thr = thresholds_.data() + f * t;
      uint32_t bin = 0;
      while (bin < t && v >= thr[bin]) ++bin;
      counts[f][bin]++;
    }
  }
  return counts;
}

}  // namespace uleen
