#include "uleen/train_oneshot.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace uleen {

std::string to_string(BleachMode mode) {
  switch (mode) {
    case BleachMode::kAuto: return "auto";
    case BleachMode::kBisect: return "bisect";
    case BleachMode::kExhaustive: return "exhaustive";
  }
  return "auto";
}

BleachMode bleach_mode_from_string(const std::string& name) {
  if (name == "auto") return BleachMode::kAuto;
  if (name == "bisect") return BleachMode::kBisect;
  if (name == "exhaustive") return BleachMode::kExhaustive;
  throw std::invalid_argument("unknown bleach mode: " + name);
}

namespace oneshot {

namespace {

void require_single_submodel(const CountingEnsemble& model) {
  if (model.submodels.size() != 1) {
    throw std::invalid_argument(
        "one-shot training requires a single submodel; ensembles are only "
        "trained with the multi-shot rule (configure one submodel or switch "
        "mode)");
  }
}

}  // namespace

void train(CountingEnsemble& model, const Dataset& data,
           std::span<const size_t> train_indices) {
  require_single_submodel(model);
  auto& sm = model.submodels[0];
  const uint32_t k = sm.bank.hash_count();
  std::vector<uint32_t> probes;
  BitVector encoded(model.encoder.encoded_width());
  for (size_t idx : train_indices) {
    const uint32_t label = data.labels[idx];
    if (label >= sm.discriminators.size()) {
      throw std::runtime_error("train: label out of range: " +
                               std::to_string(label));
    }
    model.encoder.encode_into(data.features.row(idx), encoded);
    sm.compute_probes(encoded, probes);
    auto& disc = sm.discriminators[label];
    for (size_t f = 0; f < disc.filters.size(); ++f) {
      disc.filters[f].add(
          std::span<const uint32_t>(probes).subspan(f * k, k));
    }
  }
}

uint32_t max_counter(const CountingEnsemble& model) {
  uint32_t max_v = 0;
  for (const auto& sm : model.submodels) {
    for (const auto& d : sm.discriminators) {
      for (const auto& f : d.filters) max_v = std::max(max_v, f.max_counter());
    }
  }
  return max_v;
}

namespace {

// Per validation sample and class, the sorted per-filter minimum counters.
// The response at threshold b is then N minus a binary search, so the whole
// accuracy curve costs one pass over the filters plus log-time per b.
struct BleachEvaluator {
  size_t num_classes;
  size_t num_filters;
  std::vector<uint32_t> labels;
  std::vector<uint32_t> mins;  // sample-major, then class, then sorted filter

  BleachEvaluator(const CountingEnsemble& model, const Dataset& data,
                  std::span<const size_t> val_indices) {
    const auto& sm = model.submodels[0];
    num_classes = sm.discriminators.size();
    num_filters = sm.num_filters();
    const uint32_t k = sm.bank.hash_count();
    labels.reserve(val_indices.size());
    mins.resize(val_indices.size() * num_classes * num_filters);
    std::vector<uint32_t> probes;
    BitVector encoded(model.encoder.encoded_width());
    size_t pos = 0;
    for (size_t idx : val_indices) {
      labels.push_back(data.labels[idx]);
      model.encoder.encode_into(data.features.row(idx), encoded);
      sm.compute_probes(encoded, probes);
      for (size_t c = 0; c < num_classes; ++c) {
        const auto& disc = sm.discriminators[c];
        uint32_t* row = mins.data() + pos;
        for (size_t f = 0; f < num_filters; ++f) {
          row[f] = disc.filters[f].min_counter(
              std::span<const uint32_t>(probes).subspan(f * k, k));
        }
        std::sort(row, row + num_filters);
        pos += num_filters;
      }
    }
  }

  double accuracy(uint32_t b) const {
    size_t correct = 0;
    std::vector<int64_t> responses(num_classes);
    for (size_t s = 0; s < labels.size(); ++s) {
      for (size_t c = 0; c < num_classes; ++c) {
        const uint32_t* row = mins.data() + (s * num_classes + c) * num_filters;
        responses[c] = num_filters -
                       (std::lower_bound(row, row + num_filters, b) - row);
      }
      if (argmax_lowest(responses) == labels[s]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
  }
};

}  // namespace

BleachResult select_bleach(const CountingEnsemble& model, const Dataset& data,
                           std::span<const size_t> val_indices,
                           BleachMode mode) {
  require_single_submodel(model);
  if (val_indices.empty()) {
    throw std::invalid_argument("select_bleach: empty validation set");
  }
  const uint32_t max_b = max_counter(model);
  if (max_b < 1) {
    throw std::invalid_argument("select_bleach: model is untrained");
  }
  if (mode == BleachMode::kAuto) {
    mode = max_b <= 64 ? BleachMode::kExhaustive : BleachMode::kBisect;
  }

  const BleachEvaluator eval(model, data, val_indices);
  std::map<uint32_t, double> cache;
  auto acc = [&](uint32_t b) {
    auto it = cache.find(b);
    if (it == cache.end()) it = cache.emplace(b, eval.accuracy(b)).first;
    return it->second;
  };

  BleachResult result;
  result.mode_used = mode;
  if (mode == BleachMode::kExhaustive) {
    uint32_t best_b = 1;
    double best_acc = acc(1);
    for (uint32_t b = 2; b <= max_b; ++b) {
      const double a = acc(b);
      if (a > best_acc) {
        best_acc = a;
        best_b = b;
      }
    }
    result.b_star = best_b;
    result.accuracy = best_acc;
  } else {
    // Coarse-to-fine descent: start at the middle of the counter range and
    // repeatedly move to the best of {b - step, b, b + step}, halving the
    // step. Ties prefer the smaller threshold, so plateaus collapse toward
    // the low-b side where the peak of a saturation curve lives.
    uint32_t best = std::max<uint32_t>(1, max_b / 2);
    uint32_t step = std::max<uint32_t>(1, max_b / 4);
    while (true) {
      const int64_t candidates[3] = {int64_t{best} - step, int64_t{best},
                                     int64_t{best} + step};
      uint32_t new_best = best;
      double new_acc = -1.0;
      for (int64_t c : candidates) {
        if (c < 1 || c > int64_t{max_b}) continue;
        const double a = acc(static_cast<uint32_t>(c));
        if (a > new_acc) {
          new_acc = a;
          new_best = static_cast<uint32_t>(c);
        }
      }
      if (new_best == best && step == 1) break;
      best = new_best;
      if (step > 1) step /= 2;
    }
    result.b_star = best;
    result.accuracy = acc(best);
  }
  result.curve.assign(cache.begin(), cache.end());
  return result;
}

BinaryEnsemble finalize(const CountingEnsemble& model, uint32_t b_star) {
  BinaryEnsemble out;
  out.encoder = model.encoder;
  out.class_names = model.class_names;
  out.seed = model.seed;
  for (const auto& sm : model.submodels) {
    Submodel<BinaryFilter> bin;
    bin.mapping = sm.mapping;
    bin.bank = sm.bank;
    for (const auto& d : sm.discriminators) {
      Discriminator<BinaryFilter> bd;
      bd.kept = d.kept;
      bd.bias = d.bias;
      bd.filters.reserve(d.filters.size());
      for (const auto& f : d.filters) bd.filters.push_back(f.binarize(b_star));
      bin.discriminators.push_back(std::move(bd));
    }
    out.submodels.push_back(std::move(bin));
  }
  return out;
}

}  // namespace oneshot

}  // namespace uleen
