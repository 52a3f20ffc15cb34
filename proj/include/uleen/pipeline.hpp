#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "uleen/config.hpp"
#include "uleen/dataset.hpp"
#include "uleen/model.hpp"
#include "uleen/train_multishot.hpp"

namespace uleen::pipeline {

/// Dataset source: either an IDX image/label pair (optionally with an
/// explicit test pair) or a labeled CSV.
struct DataSpec {
  std::string train_images;
  std::string train_labels;
  std::string test_images;  // optional
  std::string test_labels;
  std::string csv;
  int label_column = -1;
  bool header = false;
};

/// Returns the path itself when it exists, otherwise tries it under
/// ULEEN_DATA_DIR.
std::string resolve_data_path(const std::string& path);

/// Loads and tags the dataset: explicit test sets are preserved and a
/// validation slice is carved from train; otherwise a seeded 2:1
/// train/test split is applied first.
Dataset load_data(const DataSpec& spec, uint64_t seed, double val_fraction);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_submodel;              // each submodel alone
  std::vector<std::vector<uint64_t>> confusion;  // [true][predicted]
  size_t count = 0;
};

EvalResult evaluate(const BinaryEnsemble& model, const Dataset& data,
                    std::span<const size_t> indices);

struct TrainOutcome {
  BinaryEnsemble model;
  double accuracy_val = 0.0;
  double accuracy_test = 0.0;
  std::vector<double> submodel_accuracy_test;
  // one-shot path
  uint32_t b_star = 0;
  std::string bleach_mode_used;
  // multi-shot path
  std::vector<multishot::EpochLog> epochs;  // training then fine-tuning
  double val_accuracy_before_prune = 0.0;
  double val_accuracy_after_prune = 0.0;
};

/// One-shot: train -> bleach -> finalize. Multi-shot: train -> prune ->
/// fine-tune -> finalize. The finalized model is evaluated on the test tag.
TrainOutcome run_training(const RunConfig& cfg, const Dataset& data,
                          std::ostream* log = nullptr);

struct SweepGrid {
  std::vector<uint32_t> bits_per_input;
  std::vector<uint32_t> inputs_per_filter;
  std::vector<uint64_t> entries;  // powers of two
  std::vector<uint32_t> hashes;
  uint64_t size_cap_bits = 0;  // 0 = unlimited; over-cap configs are skipped
};

struct SweepRow {
  uint32_t bits_per_input = 0;
  uint32_t inputs_per_filter = 0;
  uint64_t entries = 0;
  uint32_t hashes = 0;
  double accuracy = 0.0;
  uint64_t size_bits = 0;
};

/// One-shot training over the Cartesian product of the grid, one row per
/// in-cap config in grid order. Workers run configs in parallel; results
/// keep grid order.
std::vector<SweepRow> sweep(const SweepGrid& grid, const Dataset& data,
                            const RunConfig& base, unsigned threads);

}  // namespace uleen::pipeline
