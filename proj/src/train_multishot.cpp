#include "uleen/train_multishot.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace uleen::multishot {

void validate(const TrainConfig& config) {
  if (config.batch_size < 1) {
    throw std::invalid_argument("train config: batch_size must be >= 1");
  }
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("train config: learning_rate must be > 0");
  }
  if (!(config.dropout_p >= 0.0 && config.dropout_p < 1.0)) {
    throw std::invalid_argument("train config: dropout_p must be in [0, 1)");
  }
  if (!(config.prune_ratio >= 0.0 && config.prune_ratio < 1.0)) {
    throw std::invalid_argument("train config: prune_ratio must be in [0, 1)");
  }
  if (!(config.adam_beta1 >= 0.0 && config.adam_beta1 < 1.0) ||
      !(config.adam_beta2 >= 0.0 && config.adam_beta2 < 1.0)) {
    throw std::invalid_argument("train config: Adam betas must be in [0, 1)");
  }
}

EncodedDataset encode_all(const ThermometerEncoder& encoder,
                          const Dataset& data,
                          std::span<const size_t> indices) {
  EncodedDataset out;
  out.width = encoder.encoded_width();
  out.words_per_sample = (out.width + 63) / 64;
  out.bits.resize(indices.size() * out.words_per_sample, 0);
  out.labels.reserve(indices.size());
  BitVector tmp(out.width);
  for (size_t row = 0; row < indices.size(); ++row) {
    const size_t idx = indices[row];
    encoder.encode_into(data.features.row(idx), tmp);
    std::copy(tmp.words().begin(), tmp.words().end(),
              out.bits.begin() + row * out.words_per_sample);
    out.labels.push_back(data.labels[idx]);
  }
  return out;
}

TableLayout TableLayout::of(const ContinuousEnsemble& model) {
  TableLayout layout;
  layout.classes = model.num_classes();
  for (const auto& sm : model.submodels) {
    Sub s;
    s.probe_base = layout.probe_stride;
    s.node_base = layout.node_stride;
    s.entry_base = layout.entry_total;
    s.num_filters = sm.num_filters();
    s.entries = sm.entries_per_filter();
    s.hash_count = sm.bank.hash_count();
    layout.probe_stride += s.num_filters * s.hash_count;
    layout.node_stride += layout.classes * s.num_filters;
    layout.entry_total += layout.classes * s.num_filters * s.entries;
    layout.subs.push_back(s);
  }
  return layout;
}

void make_dropout_mask(const TableLayout& layout, size_t batch_size, double p,
                       SplitMix64& rng, DropoutMask& mask) {
  mask.node_stride = layout.node_stride;
  mask.scale = 1.0 / (1.0 - p);
  mask.keep.resize(batch_size * layout.node_stride);
  for (auto& bit : mask.keep) bit = rng.next_unit() >= p ? 1 : 0;
}

void forward_train(const ContinuousEnsemble& model, const TableLayout& layout,
                   const EncodedDataset& data,
                   std::span<const size_t> batch_indices,
                   const DropoutMask& mask, ForwardCache& cache) {
  const size_t batch = batch_indices.size();
  cache.batch = batch;
  cache.probes.resize(batch * layout.probe_stride);
  cache.argmin.assign(batch * layout.node_stride, 0);
  cache.logits = Matrix(batch, layout.classes);
  for (size_t b = 0; b < batch; ++b) {
    const uint64_t* words = data.sample(batch_indices[b]);
    uint32_t* probe_row = cache.probes.data() + b * layout.probe_stride;
    uint32_t* amin_row = cache.argmin.data() + b * layout.node_stride;
    const uint8_t* keep_row = mask.keep.data() + b * layout.node_stride;
    double* logits = cache.logits.values.data() + b * layout.classes;
    for (size_t s = 0; s < model.submodels.size(); ++s) {
      const auto& sm = model.submodels[s];
      const auto& ls = layout.subs[s];
      uint32_t* probes = probe_row + ls.probe_base;
      sm.compute_probes_words(words, probes);
      const uint32_t k = ls.hash_count;
      for (size_t c = 0; c < layout.classes; ++c) {
        const auto& disc = sm.discriminators[c];
        double logit = disc.bias;
        const size_t node0 = ls.node_base + c * ls.num_filters;
        for (size_t f = 0; f < ls.num_filters; ++f) {
          if (!disc.kept.get(f) || !keep_row[node0 + f]) continue;
          const auto fw = disc.filters[f].forward(
              std::span<const uint32_t>(probes + f * k, k));
          amin_row[node0 + f] = fw.argmin_mask;
          if (fw.bit) logit += mask.scale;
        }
        logits[c] += logit;
      }
    }
  }
}

double backward(const ContinuousEnsemble& model, const TableLayout& layout,
                const Matrix& logits, std::span<const uint32_t> labels,
                const ForwardCache& cache, const DropoutMask& mask,
                std::vector<double>& grads) {
  const size_t batch = cache.batch;
  const size_t classes = layout.classes;
  grads.assign(layout.entry_total, 0.0);
  double total_loss = 0.0;
  std::vector<double> dlogit(classes);
  for (size_t b = 0; b < batch; ++b) {
    if (labels[b] >= classes) {
      throw std::runtime_error("backward: label out of range");
    }
    const double* lrow = logits.values.data() + b * classes;
    const double peak = *std::max_element(lrow, lrow + classes);
    double sum = 0.0;
    for (size_t c = 0; c < classes; ++c) {
      dlogit[c] = std::exp(lrow[c] - peak);
      sum += dlogit[c];
    }
    for (size_t c = 0; c < classes; ++c) dlogit[c] /= sum;
    total_loss += -std::log(dlogit[labels[b]]);
    for (size_t c = 0; c < classes; ++c) {
      dlogit[c] = (dlogit[c] - (c == labels[b] ? 1.0 : 0.0)) /
                  static_cast<double>(batch);
    }

    const uint32_t* probe_row = cache.probes.data() + b * layout.probe_stride;
    const uint32_t* amin_row = cache.argmin.data() + b * layout.node_stride;
    const uint8_t* keep_row = mask.keep.data() + b * layout.node_stride;
    for (size_t s = 0; s < model.submodels.size(); ++s) {
      const auto& sm = model.submodels[s];
      const auto& ls = layout.subs[s];
      const uint32_t k = ls.hash_count;
      for (size_t c = 0; c < classes; ++c) {
        const double g = dlogit[c] * mask.scale;
        if (g == 0.0) continue;
        const auto& disc = sm.discriminators[c];
        const size_t node0 = ls.node_base + c * ls.num_filters;
        const size_t slot0 = ls.entry_base + c * ls.num_filters * ls.entries;
        for (size_t f = 0; f < ls.num_filters; ++f) {
          if (!disc.kept.get(f) || !keep_row[node0 + f]) continue;
          const uint32_t am = amin_row[node0 + f];
          const uint32_t* probes = probe_row + ls.probe_base + f * k;
          double* table_grads = grads.data() + slot0 + f * ls.entries;
          // Tied minima all receive the full gradient, but an entry
          // addressed twice (probe collision) still counts once.
          for (uint32_t rest = am; rest != 0; rest &= rest - 1) {
            const int j = std::countr_zero(rest);
            const uint32_t idx = probes[j];
            bool duplicate = false;
            for (uint32_t prior = am & ((uint32_t{1} << j) - 1); prior != 0;
                 prior &= prior - 1) {
              if (probes[std::countr_zero(prior)] == idx) {
                duplicate = true;
                break;
              }
            }
            if (!duplicate) table_grads[idx] += g;
          }
        }
      }
    }
  }
  return total_loss / static_cast<double>(batch);
}

void adam_step(ContinuousEnsemble& model, const TableLayout& layout,
               std::span<const double> grads, GradState& state,
               const TrainConfig& config) {
  if (state.m.size() != layout.entry_total) {
    state.m.assign(layout.entry_total, 0.0);
    state.v.assign(layout.entry_total, 0.0);
    state.step_count = 0;
  }
  state.step_count += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double corr1 =
      1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 =
      1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (size_t s = 0; s < model.submodels.size(); ++s) {
    auto& sm = model.submodels[s];
    const auto& ls = layout.subs[s];
    for (size_t c = 0; c < layout.classes; ++c) {
      auto& disc = sm.discriminators[c];
      for (size_t f = 0; f < ls.num_filters; ++f) {
        if (!disc.kept.get(f)) continue;
        const size_t base = layout.entry_slot(s, c, f, 0);
        double* table = disc.filters[f].values().data();
        for (size_t e = 0; e < ls.entries; ++e) {
          const double g = grads[base + e];
          const double m = state.m[base + e] =
              b1 * state.m[base + e] + (1.0 - b1) * g;
          const double v = state.v[base + e] =
              b2 * state.v[base + e] + (1.0 - b2) * g * g;
          const double update = config.learning_rate * (m / corr1) /
                                (std::sqrt(v / corr2) + config.adam_epsilon);
          table[e] = std::clamp(table[e] - update, -1.0, 1.0);
        }
      }
    }
  }
}

Dataset augment_mnist(const Dataset& data, std::span<const size_t> indices) {
  if (data.image_rows == 0 || data.image_cols == 0) {
    throw std::invalid_argument("augment: dataset has no image geometry");
  }
  const size_t h = data.image_rows;
  const size_t w = data.image_cols;
  Dataset out;
  out.class_names = data.class_names;
  out.image_rows = h;
  out.image_cols = w;
  out.features = Matrix(indices.size() * 9, h * w);
  out.labels.reserve(indices.size() * 9);
  size_t row = 0;
  for (size_t idx : indices) {
    const auto src = data.features.row(idx);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        auto dst = out.features.row(row);
        for (size_t r = 0; r < h; ++r) {
          const long sr = static_cast<long>(r) - dy;
          if (sr < 0 || sr >= static_cast<long>(h)) continue;
          for (size_t c = 0; c < w; ++c) {
            const long sc = static_cast<long>(c) - dx;
            if (sc < 0 || sc >= static_cast<long>(w)) continue;
            dst[r * w + c] = src[static_cast<size_t>(sr) * w +
                                 static_cast<size_t>(sc)];
          }
        }
        out.labels.push_back(data.labels[idx]);
        ++row;
      }
    }
  }
  out.tags.assign(out.labels.size(), Split::kTrain);
  return out;
}

double evaluate_accuracy(const ContinuousEnsemble& model,
                         const EncodedDataset& data) {
  if (data.size() == 0) {
    throw std::invalid_argument("evaluate: empty dataset");
  }
  const TableLayout layout = TableLayout::of(model);
  std::vector<uint32_t> probes(layout.probe_stride);
  std::vector<int64_t> responses(layout.classes);
  size_t correct = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    const uint64_t* words = data.sample(i);
    std::fill(responses.begin(), responses.end(), 0);
    for (size_t s = 0; s < model.submodels.size(); ++s) {
      const auto& sm = model.submodels[s];
      const auto& ls = layout.subs[s];
      sm.compute_probes_words(words, probes.data() + ls.probe_base);
      const std::span<const uint32_t> sub_probes(
          probes.data() + ls.probe_base, ls.num_filters * ls.hash_count);
      for (size_t c = 0; c < layout.classes; ++c) {
        responses[c] += discriminator_response(sm.discriminators[c],
                                               sub_probes, ls.hash_count);
      }
    }
    if (argmax_lowest(responses) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

TrainResult run_epochs(ContinuousEnsemble& model,
                       const EncodedDataset& train_set,
                       const EncodedDataset& val_set,
                       const TrainConfig& config, uint64_t stream_index,
                       std::ostream* log) {
  validate(config);
  if (train_set.size() == 0) {
    throw std::invalid_argument("train: empty training set");
  }
  const TableLayout layout = TableLayout::of(model);
  SplitMix64 shuffle_rng(
      derive_seed(config.seed, seed_role::kShuffle, stream_index));
  SplitMix64 dropout_rng(
      derive_seed(config.seed, seed_role::kDropout, stream_index));
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});

  GradState state;
  DropoutMask mask;
  ForwardCache cache;
  std::vector<double> grads;
  std::vector<uint32_t> labels(config.batch_size);
  TrainResult result;
  for (uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size();
         start += config.batch_size) {
      const size_t len =
          std::min<size_t>(config.batch_size, order.size() - start);
      const std::span<const size_t> batch(order.data() + start, len);
      labels.resize(len);
      for (size_t i = 0; i < len; ++i) {
        labels[i] = train_set.labels[batch[i]];
      }
      make_dropout_mask(layout, len, config.dropout_p, dropout_rng, mask);
      forward_train(model, layout, train_set, batch, mask, cache);
      const double loss =
          backward(model, layout, cache.logits, labels, cache, mask, grads);
      adam_step(model, layout, grads, state, config);
      loss_sum += loss * static_cast<double>(len);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(order.size());
    entry.val_accuracy =
        val_set.size() > 0 ? evaluate_accuracy(model, val_set) : 0.0;
    if (log != nullptr) {
      (*log) << "epoch=" << entry.epoch << " loss=" << entry.loss
             << " val_accuracy=" << entry.val_accuracy << std::endl;
    }
    result.epochs.push_back(entry);
  }
  return result;
}

}  // namespace

TrainResult train(ContinuousEnsemble& model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& config,
                  std::ostream* log) {
  return run_epochs(model, train_set, val_set, config, 0, log);
}

TrainResult fine_tune(ContinuousEnsemble& model,
                      const EncodedDataset& train_set,
                      const EncodedDataset& val_set, const TrainConfig& config,
                      std::ostream* log) {
  return run_epochs(model, train_set, val_set, config, 1, log);
}

void prune(ContinuousEnsemble& model, const EncodedDataset& train_set,
           double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("prune: ratio must be in [0, 1)");
  }
  if (train_set.size() == 0) {
    throw std::invalid_argument("prune: empty training set");
  }
  if (ratio == 0.0) return;
  for (const auto& sm : model.submodels) {
    for (const auto& d : sm.discriminators) {
      if (d.kept_count() != sm.num_filters()) {
        throw std::invalid_argument("prune: model is already pruned");
      }
    }
  }

  const TableLayout layout = TableLayout::of(model);
  const size_t samples = train_set.size();
  std::vector<uint64_t> count_x(layout.node_stride, 0);   // filter fired
  std::vector<uint64_t> count_xy(layout.node_stride, 0);  // fired on own class
  std::vector<uint64_t> count_y(layout.classes, 0);
  std::vector<uint32_t> probes(layout.probe_stride);
  for (size_t i = 0; i < samples; ++i) {
    const uint32_t label = train_set.labels[i];
    ++count_y[label];
    const uint64_t* words = train_set.sample(i);
    for (size_t s = 0; s < model.submodels.size(); ++s) {
      const auto& sm = model.submodels[s];
      const auto& ls = layout.subs[s];
      uint32_t* sub_probes = probes.data() + ls.probe_base;
      sm.compute_probes_words(words, sub_probes);
      const uint32_t k = ls.hash_count;
      for (size_t c = 0; c < layout.classes; ++c) {
        const auto& disc = sm.discriminators[c];
        const size_t node0 = ls.node_base + c * ls.num_filters;
        for (size_t f = 0; f < ls.num_filters; ++f) {
          const bool fired =
              disc.filters[f]
                  .forward(std::span<const uint32_t>(sub_probes + f * k, k))
                  .bit;
          if (fired) {
            ++count_x[node0 + f];
            if (c == label) ++count_xy[node0 + f];
          }
        }
      }
    }
  }

  const double total = static_cast<double>(samples);
  for (size_t s = 0; s < model.submodels.size(); ++s) {
    auto& sm = model.submodels[s];
    const auto& ls = layout.subs[s];
    const size_t prune_count = static_cast<size_t>(
        std::floor(ratio * static_cast<double>(ls.num_filters)));
    for (size_t c = 0; c < layout.classes; ++c) {
      auto& disc = sm.discriminators[c];
      const double mean_y = static_cast<double>(count_y[c]) / total;
      const double sd_y = std::sqrt(mean_y * (1.0 - mean_y));
      std::vector<std::pair<double, size_t>> ranked;
      ranked.reserve(ls.num_filters);
      for (size_t f = 0; f < ls.num_filters; ++f) {
        const size_t node = ls.node_base + c * ls.num_filters + f;
        const double mean_x = static_cast<double>(count_x[node]) / total;
        const double mean_xy = static_cast<double>(count_xy[node]) / total;
        const double sd_x = std::sqrt(mean_x * (1.0 - mean_x));
        const double corr =
            (sd_x == 0.0 || sd_y == 0.0)
                ? 0.0
                : (mean_xy - mean_x * mean_y) / (sd_x * sd_y);
        ranked.emplace_back(corr, f);
      }
      std::sort(ranked.begin(), ranked.end());
      double pruned_mean_response = 0.0;
      for (size_t r = 0; r < prune_count; ++r) {
        const size_t f = ranked[r].second;
        disc.kept.set(f, false);
        const size_t node = ls.node_base + c * ls.num_filters + f;
        pruned_mean_response += static_cast<double>(count_x[node]) / total;
      }
      disc.bias = static_cast<int32_t>(std::lround(pruned_mean_response));
    }
  }
}

BinaryEnsemble finalize(const ContinuousEnsemble& model) {
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
      for (const auto& f : d.filters) bd.filters.push_back(f.binarize());
      bin.discriminators.push_back(std::move(bd));
    }
    out.submodels.push_back(std::move(bin));
  }
  return out;
}

}  // namespace uleen::multishot
