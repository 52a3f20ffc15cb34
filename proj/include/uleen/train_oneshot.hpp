#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uleen/dataset.hpp"
#include "uleen/model.hpp"

namespace uleen {

enum class BleachMode : uint8_t { kAuto = 0, kBisect = 1, kExhaustive = 2 };

std::string to_string(BleachMode mode);
BleachMode bleach_mode_from_string(const std::string& name);

struct BleachResult {
  uint32_t b_star = 1;
  double accuracy = 0.0;            // validation accuracy at b_star
  BleachMode mode_used = BleachMode::kExhaustive;
  std::vector<std::pair<uint32_t, double>> curve;  // evaluated (b, acc), by b
};

namespace oneshot {

/// Presents each training sample to its class's discriminator once: every
/// filter performs a min-increment add on its hashed input tuple. Order
/// matters only through counter ties. Requires a single-submodel ensemble.
void train(CountingEnsemble& model, const Dataset& data,
           std::span<const size_t> train_indices);

uint32_t max_counter(const CountingEnsemble& model);

/// Picks the bleaching threshold on the validation samples. Exhaustive mode
/// scans every b in [1, max_counter] (lowest b wins ties); bisect starts at
/// max_counter / 2 and repeatedly moves to the best of {b - step, b,
/// b + step} with a halving step, smaller b winning ties. Auto resolves to
/// exhaustive when max_counter <= 64, bisect otherwise.
BleachResult select_bleach(const CountingEnsemble& model, const Dataset& data,
                           std::span<const size_t> val_indices,
                           BleachMode mode = BleachMode::kAuto);

/// Binarizes every filter at b_star; predictions equal the counting model
/// queried at b_star on every input.
BinaryEnsemble finalize(const CountingEnsemble& model, uint32_t b_star);

}  // namespace oneshot

}  // namespace uleen
