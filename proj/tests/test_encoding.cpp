#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "uleen/encoding.hpp"
#include "uleen/matrix.hpp"

using namespace uleen;

namespace {

Matrix column(std::vector<double> values) {
  Matrix m(values.size(), 1);
  for (size_t i = 0; i < values.size(); ++i) m.at(i, 0) = values[i];
  return m;
}

}  // namespace

// Reference quantiles computed with an independent implementation of the
// standard normal inverse CDF (SciPy 1.x, norm.ppf), frozen here.
TEST_CASE("inverse normal cdf matches reference quantiles") {
  const struct {
    double p;
    double z;
  } table[] = {
      {0.05, -1.6448536269514729},  {0.0625, -1.5341205443525463},
      {0.1, -1.2815515655446004},   {0.125, -1.1503493803760079},
      {0.25, -0.6744897501960817},  {1.0 / 3.0, -0.43072729929545756},
      {0.5, 0.0},                   {0.75, 0.6744897501960817},
      {0.9, 1.2815515655446004},    {0.99, 2.3263478740408408},
      {1e-6, -4.753424308822899},
  };
  for (const auto& row : table) {
    CHECK(std::fabs(inverse_normal_cdf(row.p) - row.z) < 1e-8);
  }
  CHECK(inverse_normal_cdf(0.75) == -inverse_normal_cdf(0.25));
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), std::invalid_argument);
  CHECK_THROWS_AS(inverse_normal_cdf(1.0), std::invalid_argument);
  CHECK_THROWS_AS(inverse_normal_cdf(-0.5), std::invalid_argument);
}

TEST_CASE("gaussian fit places thresholds at normal quantiles") {
  // Two samples {3, 7}: mean 5, population std 2.
  Matrix data = column({3.0, 7.0});

  SUBCASE("t=1 threshold sits at the mean") {
    auto enc = ThermometerEncoder::fit(data, 1, EncoderMode::kGaussian);
    CHECK(enc.threshold(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(enc.stats()[0].mean == doctest::Approx(5.0));
    CHECK(enc.stats()[0].std == doctest::Approx(2.0));
  }

  SUBCASE("t=3 thresholds are the quartiles") {
    Matrix unit = column({-1.0, 1.0});  // mean 0, std 1
    auto enc = ThermometerEncoder::fit(unit, 3, EncoderMode::kGaussian);
    CHECK(std::fabs(enc.threshold(0, 0) - (-0.6744897501960817)) < 1e-8);
    CHECK(std::fabs(enc.threshold(0, 1)) < 1e-8);
    CHECK(std::fabs(enc.threshold(0, 2) - 0.6744897501960817) < 1e-8);
  }

  SUBCASE("constant feature degenerates to the mean") {
    Matrix flat = column({4.0, 4.0, 4.0});
    auto enc = ThermometerEncoder::fit(flat, 5, EncoderMode::kGaussian);
    for (uint32_t i = 0; i < 5; ++i) {
      CHECK(enc.threshold(0, i) == 4.0);
    }
  }

  SUBCASE("thresholds are non-decreasing") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    Matrix noisy(50, 3);
    for (auto& v : noisy.values) v = dist(gen);
    auto enc = ThermometerEncoder::fit(noisy, 8, EncoderMode::kGaussian);
    for (size_t f = 0; f < 3; ++f) {
      for (uint32_t i = 1; i < 8; ++i) {
        CHECK(enc.threshold(f, i) >= enc.threshold(f, i - 1));
      }
    }
  }
}

TEST_CASE("linear fit spaces thresholds evenly, endpoints excluded") {
  Matrix data = column({0.0, 10.0, 5.0});
  auto enc = ThermometerEncoder::fit(data, 4, EncoderMode::kLinear);
  CHECK(enc.threshold(0, 0) == doctest::Approx(2.0));
  CHECK(enc.threshold(0, 1) == doctest::Approx(4.0));
  CHECK(enc.threshold(0, 2) == doctest::Approx(6.0));
  CHECK(enc.threshold(0, 3) == doctest::Approx(8.0));
}

TEST_CASE("fit rejects bad input") {
  Matrix one = column({1.0});
  Matrix two = column({1.0, 2.0});
  CHECK_THROWS_AS(ThermometerEncoder::fit(one, 2, EncoderMode::kGaussian),
                  std::invalid_argument);
  CHECK_THROWS_AS(ThermometerEncoder::fit(two, 0, EncoderMode::kGaussian),
                  std::invalid_argument);
  Matrix bad = column({1.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(ThermometerEncoder::fit(bad, 2, EncoderMode::kGaussian),
                  std::invalid_argument);
  Matrix inf = column({1.0, std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(ThermometerEncoder::fit(inf, 2, EncoderMode::kGaussian),
                  std::invalid_argument);
}

TEST_CASE("encode produces the >= unary code") {
  auto enc = ThermometerEncoder::from_thresholds(3, EncoderMode::kGaussian, 1,
                                                 {-0.67, 0.0, 0.67});
  const double mid[] = {0.0};
  BitVector bits = enc.encode(mid);
  CHECK(bits.size() == 3);
  CHECK(bits.get(0));
  CHECK(bits.get(1));   // exactly at the threshold sets the bit
  CHECK(!bits.get(2));

  const double below[] = {-5.0};
  bits = enc.encode(below);
  CHECK(bits.count() == 0);

  const double above[] = {5.0};
  bits = enc.encode(above);
  CHECK(bits.count() == 3);

  const double edge[] = {-0.67};
  bits = enc.encode(edge);
  CHECK(bits.get(0));
  CHECK(!bits.get(1));
}

TEST_CASE("encode rejects mismatched or non-finite samples") {
  auto enc = ThermometerEncoder::from_thresholds(2, EncoderMode::kLinear, 2,
                                                 {0.0, 1.0, 0.0, 1.0});
  std::vector<double> wrong = {1.0};
  CHECK_THROWS_AS(enc.encode(wrong), std::invalid_argument);
  std::vector<double> nan = {1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(enc.encode(nan), std::invalid_argument);
}

TEST_CASE("from_thresholds validates shape and ordering") {
  CHECK_THROWS_AS(ThermometerEncoder::from_thresholds(
                      2, EncoderMode::kGaussian, 2, {0.0, 1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ThermometerEncoder::from_thresholds(
                      2, EncoderMode::kGaussian, 1, {1.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("encoded groups are unary codes on random samples") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> dist(2.0, 3.0);
  Matrix train(200, 4);
  for (auto& v : train.values) v = dist(gen);
  auto enc = ThermometerEncoder::fit(train, 7, EncoderMode::kGaussian);

  std::vector<double> sample(4);
  for (int trial = 0; trial < 10000; ++trial) {
    for (auto& v : sample) v = dist(gen);
    BitVector bits = enc.encode(sample);
    for (size_t f = 0; f < 4; ++f) {
      bool seen_zero = false;
      for (uint32_t i = 0; i < 7; ++i) {
        const bool b = bits.get(f * 7 + i);
        if (seen_zero) CHECK(!b);
        if (!b) seen_zero = true;
      }
    }
  }
}

TEST_CASE("componentwise larger samples set supersets of bits") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  std::uniform_real_distribution<double> bump(0.0, 2.0);
  Matrix train(100, 3);
  for (auto& v : train.values) v = dist(gen);
  auto enc = ThermometerEncoder::fit(train, 5, EncoderMode::kGaussian);

  std::vector<double> lo(3), hi(3);
  for (int trial = 0; trial < 2000; ++trial) {
    for (size_t f = 0; f < 3; ++f) {
      lo[f] = dist(gen);
      hi[f] = lo[f] + bump(gen);
    }
    BitVector a = enc.encode(lo);
    BitVector b = enc.encode(hi);
    for (size_t i = 0; i < a.size(); ++i) {
      if (a.get(i)) CHECK(b.get(i));
    }
  }
}

TEST_CASE("gaussian thresholds split normal draws into equal bins") {
  // Monte-Carlo check with an independent noise source.
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> dist(3.0, 2.0);
  const size_t samples = 200000;
  Matrix draws(samples, 1);
  for (auto& v : draws.values) v = dist(gen);

  for (uint32_t t : {1u, 3u, 7u}) {
    auto enc = ThermometerEncoder::fit(draws, t, EncoderMode::kGaussian);
    auto counts = enc.quantile_bin_counts(draws);
    REQUIRE(counts.size() == 1);
    REQUIRE(counts[0].size() == t + 1);
    const double expect = 1.0 / static_cast<double>(t + 1);
    uint64_t total = 0;
    for (uint64_t c : counts[0]) total += c;
    CHECK(total == samples);
    for (uint32_t b = 0; b <= t; ++b) {
      const double frac = static_cast<double>(counts[0][b]) / samples;
      CHECK(std::fabs(frac - expect) < 0.02);
    }
  }
}

TEST_CASE("bin counts respect the >= convention") {
  auto enc = ThermometerEncoder::from_thresholds(1, EncoderMode::kLinear, 1,
                                                 {2.5});
  Matrix data = column({1.0, 2.0, 2.5, 4.0});
  auto counts = enc.quantile_bin_counts(data);
  CHECK(counts[0][0] == 2);  // 1.0, 2.0
  CHECK(counts[0][1] == 2);  // 2.5 (equality goes up), 4.0

  Matrix flat = column({4.0, 4.0, 4.0, 4.0});
  auto enc2 = ThermometerEncoder::from_thresholds(2, EncoderMode::kGaussian, 1,
                                                  {4.0, 4.0});
  auto c2 = enc2.quantile_bin_counts(flat);
  CHECK(c2[0][2] == 4);  // everything at or above the top threshold
}
