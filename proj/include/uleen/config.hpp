#pragma once

#include <string>

#include "uleen/model.hpp"
#include "uleen/train_multishot.hpp"
#include "uleen/train_oneshot.hpp"

namespace uleen {

enum class TrainMode : uint8_t { kOneshot = 0, kMultishot = 1 };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

/// Everything a training run needs beyond the dataset itself. Populated
/// from a config file; the CLI may override mode and seed.
struct RunConfig {
  ModelConfig model;
  multishot::TrainConfig train;
  TrainMode mode = TrainMode::kOneshot;
  uint32_t fine_tune_epochs = 5;
  BleachMode bleach = BleachMode::kAuto;
  double val_fraction = 0.10;
};

/// Config file grammar: "key = value" lines, "#" or ";" comments, and one
/// "[submodel]" section per submodel giving inputs_per_filter, entries
/// (a power of two) and hashes. Keys before the first section are global:
/// bits_per_input, encoder, mode, epochs, batch_size, learning_rate,
/// adam_beta1, adam_beta2, adam_epsilon, dropout, prune_ratio, augment,
/// fine_tune_epochs, bleach, val_fraction, seed. Unknown keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace uleen
