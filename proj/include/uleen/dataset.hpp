#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uleen/matrix.hpp"

namespace uleen {

enum class Split : uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

struct Dataset {
  Matrix features;                       // S x F
  std::vector<uint32_t> labels;          // S, dense in [0, M)
  std::vector<std::string> class_names;  // M
  std::vector<Split> tags;               // S; everything kTrain until split
  size_t image_rows = 0;  // set by load_idx; 0 when features are not images
  size_t image_cols = 0;

  size_t size() const { return labels.size(); }
  size_t num_features() const { return features.cols; }
  size_t num_classes() const { return class_names.size(); }

  std::vector<size_t> indices_of(Split tag) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < tags.size(); ++i) {
      if (tags[i] == tag) out.push_back(i);
    }
    return out;
  }
};

/// MNIST-style IDX pair, plain or gzip-compressed (sniffed, not by file
/// name). Pixels become reals in [0, 255]; the class index is the raw label
/// byte.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

/// RFC-4180 CSV. label_column is 0-based; negative counts from the end
/// (-1 = last column). Label strings map to dense integers in
/// first-appearance order. Every feature cell must parse as a finite real.
Dataset load_csv(const std::string& path, int label_column, bool header);

/// Unlabeled variants for prediction inputs.
Matrix load_idx_images(const std::string& images_path);
Matrix load_csv_features(const std::string& path, bool header);

/// For sources without an explicit test partition: one seeded shuffle, the
/// last floor(S/3) samples (or floor(S * test_fraction) if given) become
/// test, then the last floor(val_fraction * remaining) of the train pool
/// become validation.
void assign_split(Dataset& ds, uint64_t seed, double val_fraction = 0.10,
                  double test_fraction = -1.0);

/// For explicit train/test pairs: re-tag the last floor(val_fraction *
/// train_count) of the seeded-shuffled train samples as validation. Test
/// tags are untouched.
void carve_validation(Dataset& ds, uint64_t seed, double val_fraction = 0.10);

/// Stack an explicit test set under a train set. Class name lists must
/// agree where both define them; the result is tagged kTrain / kTest.
Dataset concat_train_test(const Dataset& train, const Dataset& test);

}  // namespace uleen
