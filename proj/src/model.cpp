#include "uleen/model.hpp"

#include <stdexcept>
#include <utility>

namespace uleen {

InputMapping InputMapping::generate(size_t encoded_bits,
                                    uint32_t inputs_per_filter,
                                    uint64_t seed) {
  if (encoded_bits == 0) {
    throw std::invalid_argument("mapping: encoded width is zero");
  }
  if (inputs_per_filter < 1 || inputs_per_filter > 64) {
    throw std::invalid_argument("mapping: inputs per filter must be in [1,64]");
  }
  InputMapping out;
  out.encoded_bits_ = encoded_bits;
  out.n_ = inputs_per_filter;
  out.seed_ = seed;
  const size_t num_filters =
      (encoded_bits + inputs_per_filter - 1) / inputs_per_filter;
  out.order_ = random_permutation(num_filters * inputs_per_filter, seed);
  return out;
}

size_t argmax_lowest(std::span<const int64_t> responses) {
  size_t best = 0;
  for (size_t c = 1; c < responses.size(); ++c) {
    if (responses[c] > responses[best]) best = c;
  }
  return best;
}

namespace {

template <typename FilterT, typename ResponseFn>
Prediction accumulate(const Ensemble<FilterT>& model, const BitVector& encoded,
                      ResponseFn&& response) {
  Prediction out;
  out.responses.assign(model.num_classes(), 0);
  std::vector<uint32_t> probes;
  for (const auto& sm : model.submodels) {
    sm.compute_probes(encoded, probes);
    const uint32_t k = sm.bank.hash_count();
    for (size_t c = 0; c < sm.discriminators.size(); ++c) {
      out.responses[c] += response(sm.discriminators[c], probes, k);
    }
  }
  out.label = argmax_lowest(out.responses);
  return out;
}

}  // namespace

Prediction predict_encoded(const BinaryEnsemble& model,
                           const BitVector& encoded) {
  return accumulate(model, encoded,
                    [](const Discriminator<BinaryFilter>& d,
                       std::span<const uint32_t> probes, uint32_t k) {
                      return discriminator_response(d, probes, k);
                    });
}

Prediction predict_encoded(const CountingEnsemble& model,
                           const BitVector& encoded, uint32_t bleach) {
  return accumulate(model, encoded,
                    [bleach](const Discriminator<CountingFilter>& d,
                             std::span<const uint32_t> probes, uint32_t k) {
                      return discriminator_response(d, probes, k, bleach);
                    });
}

Prediction predict_encoded(const ContinuousEnsemble& model,
                           const BitVector& encoded) {
  return accumulate(model, encoded,
                    [](const Discriminator<ContinuousFilter>& d,
                       std::span<const uint32_t> probes, uint32_t k) {
                      return discriminator_response(d, probes, k);
                    });
}

Prediction predict(const BinaryEnsemble& model, std::span<const double> raw) {
  return predict_encoded(model, model.encoder.encode(raw));
}

void validate(const ModelConfig& config) {
  if (config.bits_per_input < 1) {
    throw std::invalid_argument("config: bits per input must be >= 1");
  }
  if (config.submodels.empty()) {
    throw std::invalid_argument("config: at least one submodel required");
  }
  for (const auto& g : config.submodels) {
    if (g.inputs_per_filter < 1 || g.inputs_per_filter > 64) {
      throw std::invalid_argument(
          "config: inputs per filter must be in [1,64]");
    }
    if (g.entries_log2 < 1 || g.entries_log2 > 31) {
      throw std::invalid_argument(
          "config: entries per filter must be a power of two in [2, 2^31]");
    }
    if (g.hash_count < 1) {
      throw std::invalid_argument("config: hash count must be >= 1");
    }
  }
}

namespace {

template <typename FilterT>
Ensemble<FilterT> build_skeleton(const ModelConfig& config,
                                 ThermometerEncoder encoder,
                                 std::vector<std::string> class_names,
                                 uint64_t seed) {
  validate(config);
  if (class_names.size() < 2) {
    throw std::invalid_argument("build: need at least two classes");
  }
  Ensemble<FilterT> model;
  model.encoder = std::move(encoder);
  model.class_names = std::move(class_names);
  model.seed = seed;
  const size_t encoded = model.encoder.encoded_width();
  const size_t classes = model.class_names.size();
  for (size_t s = 0; s < config.submodels.size(); ++s) {
    const auto& g = config.submodels[s];
    Submodel<FilterT> sm;
    sm.mapping = InputMapping::generate(
        encoded, g.inputs_per_filter,
        derive_seed(seed, seed_role::kMapping, s));
    sm.bank =
        HashBank::generate(derive_seed(seed, seed_role::kHash, s),
                           g.inputs_per_filter, g.entries_log2, g.hash_count);
    const size_t n_filters = sm.mapping.num_filters();
    const size_t entries = size_t{1} << g.entries_log2;
    sm.discriminators.resize(classes);
    for (auto& d : sm.discriminators) {
      d.filters.assign(n_filters, FilterT(entries));
      d.kept = BitVector(n_filters);
      for (size_t f = 0; f < n_filters; ++f) d.kept.set(f, true);
    }
    model.submodels.push_back(std::move(sm));
  }
  return model;
}

}  // namespace

CountingEnsemble build_counting(const ModelConfig& config,
                                ThermometerEncoder encoder,
                                std::vector<std::string> class_names,
                                uint64_t seed) {
  return build_skeleton<CountingFilter>(config, std::move(encoder),
                                        std::move(class_names), seed);
}

ContinuousEnsemble build_continuous(const ModelConfig& config,
                                    ThermometerEncoder encoder,
                                    std::vector<std::string> class_names,
                                    uint64_t seed) {
  auto model = build_skeleton<ContinuousFilter>(config, std::move(encoder),
                                                std::move(class_names), seed);
  for (size_t s = 0; s < model.submodels.size(); ++s) {
    SplitMix64 rng(derive_seed(seed, seed_role::kInit, s));
    for (auto& d : model.submodels[s].discriminators) {
      for (auto& f : d.filters) f.init_uniform(rng);
    }
  }
  return model;
}

}  // namespace uleen
