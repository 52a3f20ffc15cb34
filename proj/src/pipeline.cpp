#include "uleen/pipeline.hpp"

#include <atomic>
#include <bit>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "uleen/train_oneshot.hpp"

namespace uleen::pipeline {

std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(path, ec)) return path;
  const char* root = std::getenv("ULEEN_DATA_DIR");
  if (root != nullptr && !fs::path(path).is_absolute()) {
    const fs::path joined = fs::path(root) / path;
    if (fs::exists(joined, ec)) return joined.string();
  }
  return path;
}

Dataset load_data(const DataSpec& spec, uint64_t seed, double val_fraction) {
  if (!spec.csv.empty()) {
    Dataset ds = load_csv(resolve_data_path(spec.csv), spec.label_column,
                          spec.header);
    assign_split(ds, seed, val_fraction);
    return ds;
  }
  if (spec.train_images.empty() || spec.train_labels.empty()) {
    throw std::invalid_argument(
        "no dataset given (need --csv or --train-images/--train-labels)");
  }
  Dataset train = load_idx(resolve_data_path(spec.train_images),
                           resolve_data_path(spec.train_labels));
  if (!spec.test_images.empty()) {
    if (spec.test_labels.empty()) {
      throw std::invalid_argument("--test-images given without --test-labels");
    }
    const Dataset test = load_idx(resolve_data_path(spec.test_images),
                                  resolve_data_path(spec.test_labels));
    Dataset ds = concat_train_test(train, test);
    carve_validation(ds, seed, val_fraction);
    return ds;
  }
  assign_split(train, seed, val_fraction);
  return train;
}

EvalResult evaluate(const BinaryEnsemble& model, const Dataset& data,
                    std::span<const size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate: no samples");
  if (data.num_features() != model.encoder.num_features()) {
    throw std::invalid_argument(
        "evaluate: dataset has " + std::to_string(data.num_features()) +
        " features, model expects " +
        std::to_string(model.encoder.num_features()));
  }
  const size_t classes = model.num_classes();
  const size_t subs = model.submodels.size();
  EvalResult result;
  result.count = indices.size();
  result.confusion.assign(classes, std::vector<uint64_t>(classes, 0));
  std::vector<size_t> submodel_correct(subs, 0);
  size_t correct = 0;

  BitVector encoded(model.encoder.encoded_width());
  std::vector<uint32_t> probes;
  std::vector<int64_t> total(classes);
  std::vector<int64_t> local(classes);
  for (size_t idx : indices) {
    model.encoder.encode_into(data.features.row(idx), encoded);
    std::fill(total.begin(), total.end(), 0);
    for (size_t s = 0; s < subs; ++s) {
      const auto& sm = model.submodels[s];
      sm.compute_probes(encoded, probes);
      const uint32_t k = sm.bank.hash_count();
      for (size_t c = 0; c < classes; ++c) {
        local[c] = discriminator_response(sm.discriminators[c], probes, k);
        total[c] += local[c];
      }
      if (argmax_lowest(local) == data.labels[idx]) ++submodel_correct[s];
    }
    const size_t predicted = argmax_lowest(total);
    if (predicted == data.labels[idx]) ++correct;
    result.confusion[data.labels[idx]][predicted]++;
  }
  result.accuracy =
      static_cast<double>(correct) / static_cast<double>(indices.size());
  for (size_t s = 0; s < subs; ++s) {
    result.per_submodel.push_back(static_cast<double>(submodel_correct[s]) /
                                  static_cast<double>(indices.size()));
  }
  return result;
}

TrainOutcome run_training(const RunConfig& cfg, const Dataset& data,
                          std::ostream* log) {
  const auto train_idx = data.indices_of(Split::kTrain);
  const auto val_idx = data.indices_of(Split::kVal);
  const auto test_idx = data.indices_of(Split::kTest);
  if (train_idx.empty()) throw std::runtime_error("no train samples");
  const uint64_t seed = cfg.train.seed;
  auto encoder = ThermometerEncoder::fit(
      data.features, train_idx, cfg.model.bits_per_input,
      cfg.model.encoder_mode);

  TrainOutcome out;
  if (cfg.mode == TrainMode::kOneshot) {
    auto counting = build_counting(cfg.model, std::move(encoder),
                                   data.class_names, seed);
    oneshot::train(counting, data, train_idx);
    const auto bleach =
        oneshot::select_bleach(counting, data, val_idx, cfg.bleach);
    out.b_star = bleach.b_star;
    out.bleach_mode_used = to_string(bleach.mode_used);
    out.accuracy_val = bleach.accuracy;
    out.model = oneshot::finalize(counting, bleach.b_star);
  } else {
    multishot::EncodedDataset enc_train;
    if (cfg.train.augment) {
      const Dataset augmented = multishot::augment_mnist(data, train_idx);
      std::vector<size_t> all(augmented.size());
      std::iota(all.begin(), all.end(), size_t{0});
      enc_train = multishot::encode_all(encoder, augmented, all);
    } else {
      enc_train = multishot::encode_all(encoder, data, train_idx);
    }
    const auto enc_val = multishot::encode_all(encoder, data, val_idx);
    auto model = build_continuous(cfg.model, std::move(encoder),
                                  data.class_names, seed);
    auto trained = multishot::train(model, enc_train, enc_val,
                                    cfg.train, log);
    out.epochs = std::move(trained.epochs);
    if (enc_val.size() > 0) {
      out.val_accuracy_before_prune =
          multishot::evaluate_accuracy(model, enc_val);
    }
    multishot::prune(model, enc_train, cfg.train.prune_ratio);
    if (enc_val.size() > 0) {
      out.val_accuracy_after_prune =
          multishot::evaluate_accuracy(model, enc_val);
    }
    if (cfg.fine_tune_epochs > 0 && cfg.train.prune_ratio > 0.0) {
      auto ft_cfg = cfg.train;
      ft_cfg.epochs = cfg.fine_tune_epochs;
      auto tuned = multishot::fine_tune(model, enc_train, enc_val,
                                        ft_cfg, log);
      out.epochs.insert(out.epochs.end(), tuned.epochs.begin(),
                        tuned.epochs.end());
    }
    out.model = multishot::finalize(model);
    if (!val_idx.empty()) {
      out.accuracy_val = evaluate(out.model, data, val_idx).accuracy;
    }
  }
  if (!test_idx.empty()) {
    auto ev = evaluate(out.model, data, test_idx);
    out.accuracy_test = ev.accuracy;
    out.submodel_accuracy_test = std::move(ev.per_submodel);
  }
  return out;
}

std::vector<SweepRow> sweep(const SweepGrid& grid, const Dataset& data,
                            const RunConfig& base, unsigned threads) {
  if (grid.bits_per_input.empty() || grid.inputs_per_filter.empty() ||
      grid.entries.empty() || grid.hashes.empty()) {
    throw std::invalid_argument("sweep: every grid axis needs a value");
  }
  std::vector<SweepRow> rows;
  const uint64_t classes = data.num_classes();
  const uint64_t feats = data.num_features();
  for (uint32_t t : grid.bits_per_input) {
    for (uint32_t n : grid.inputs_per_filter) {
      for (uint64_t entries : grid.entries) {
        if (entries < 2 || !std::has_single_bit(entries)) {
          throw std::invalid_argument(
              "sweep: entries must be powers of two >= 2");
        }
        for (uint32_t k : grid.hashes) {
          SweepRow row;
          row.bits_per_input = t;
          row.inputs_per_filter = n;
          row.entries = entries;
          row.hashes = k;
          const uint64_t num_filters = (feats * t + n - 1) / n;
          row.size_bits = classes * num_filters * entries;
          if (grid.size_cap_bits > 0 && row.size_bits > grid.size_cap_bits) {
            continue;
          }
          rows.push_back(row);
        }
      }
    }
  }

  std::atomic<size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (;;) {
      const size_t i = cursor.fetch_add(1);
      if (i >= rows.size()) return;
      try {
        RunConfig cfg = base;
        cfg.mode = TrainMode::kOneshot;
        cfg.model.bits_per_input = rows[i].bits_per_input;
        SubmodelGeometry g;
        g.inputs_per_filter = rows[i].inputs_per_filter;
        g.entries_log2 = static_cast<uint32_t>(
            std::countr_zero(rows[i].entries));
        g.hash_count = rows[i].hashes;
        cfg.model.submodels = {g};
        const auto outcome = run_training(cfg, data, nullptr);
        rows[i].accuracy = outcome.accuracy_test;
        rows[i].size_bits = model_size_bits(outcome.model);
      } catch (...) {
        std::lock_guard<std::mutex> hold(failure_lock);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(
      threads, static_cast<unsigned>(rows.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace uleen::pipeline
