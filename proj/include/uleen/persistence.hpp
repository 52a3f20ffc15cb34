#pragma once

#include <iosfwd>
#include <string>

#include "uleen/model.hpp"

namespace uleen {

/// Writes the "ULN1" binary format (all integers little-endian): magic,
/// version, class count, feature count, encoder mode, bits per input,
/// submodel count, encoder thresholds as raw 64-bit reals, then per
/// submodel its geometry (n, m, k), mapping seed and hash seed, and per
/// discriminator a bit-packed prune mask (1 = kept), the signed 32-bit
/// bias, and the bit-packed tables of the kept filters in filter order.
/// Mappings and hash banks are regenerated from the stored seeds on load.
void save(const BinaryEnsemble& model, std::ostream& out);
void save(const BinaryEnsemble& model, const std::string& path);

BinaryEnsemble load(std::istream& in);
BinaryEnsemble load(const std::string& path);

}  // namespace uleen
