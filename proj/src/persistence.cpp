#include "uleen/persistence.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace uleen {

namespace {

constexpr char kMagic[4] = {'U', 'L', 'N', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
               static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<uint64_t>(v));
}

[[noreturn]] void corrupt(const std::string& what) {
  throw std::runtime_error("model file: " + what);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) corrupt("truncated");
  return uint32_t{b[0]} | (uint32_t{b[1]} << 8) | (uint32_t{b[2]} << 16) |
         (uint32_t{b[3]} << 24);
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) corrupt("truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t{b[i]} << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_u64(in));
}

// Packs one bit per position, LSB-first within each byte.
void put_bits(std::ostream& out, size_t count, auto&& bit_at) {
  const size_t bytes = (count + 7) / 8;
  for (size_t byte = 0; byte < bytes; ++byte) {
    unsigned char packed = 0;
    for (size_t j = 0; j < 8; ++j) {
      const size_t i = byte * 8 + j;
      if (i < count && bit_at(i)) packed |= static_cast<unsigned char>(1u << j);
    }
    out.put(static_cast<char>(packed));
  }
}

void get_bits(std::istream& in, size_t count, auto&& set_bit) {
  const size_t bytes = (count + 7) / 8;
  for (size_t byte = 0; byte < bytes; ++byte) {
    int ch = in.get();
    if (ch == EOF) corrupt("truncated");
    const auto packed = static_cast<unsigned char>(ch);
    for (size_t j = 0; j < 8; ++j) {
      const size_t i = byte * 8 + j;
      if (i < count) set_bit(i, (packed >> j) & 1u);
    }
  }
}

}  // namespace

void save(const BinaryEnsemble& model, std::ostream& out) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(model.num_classes()));
  put_u32(out, static_cast<uint32_t>(model.encoder.num_features()));
  out.put(static_cast<char>(model.encoder.mode()));
  put_u32(out, model.encoder.bits_per_input());
  put_u32(out, static_cast<uint32_t>(model.submodels.size()));
  for (double thr : model.encoder.thresholds()) put_f64(out, thr);

  for (const auto& sm : model.submodels) {
    put_u32(out, sm.mapping.inputs_per_filter());
    put_u32(out, sm.bank.output_bits);
    put_u32(out, sm.bank.hash_count());
    put_u64(out, sm.mapping.seed());
    put_u64(out, sm.bank.seed);
    const size_t n_filters = sm.num_filters();
    const size_t entries = sm.entries_per_filter();
    for (const auto& disc : sm.discriminators) {
      put_bits(out, n_filters, [&](size_t f) { return disc.kept.get(f); });
      put_u32(out, static_cast<uint32_t>(disc.bias));
      for (size_t f = 0; f < n_filters; ++f) {
        if (!disc.kept.get(f)) continue;
        put_bits(out, entries,
                 [&](size_t e) { return disc.filters[f].bit(e); });
      }
    }
  }
  if (!out) throw std::runtime_error("model file: write failed");
}

void save(const BinaryEnsemble& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  save(model, out);
  out.close();
  if (!out) throw std::runtime_error(path + ": write failed");
}

BinaryEnsemble load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    corrupt("bad magic (not a ULN1 model)");
  }
  const uint32_t version = get_u32(in);
  if (version != kVersion) {
    corrupt("unsupported version " + std::to_string(version));
  }
  const uint32_t classes = get_u32(in);
  const uint32_t features = get_u32(in);
  const int mode_byte = in.get();
  if (mode_byte == EOF) corrupt("truncated");
  if (mode_byte != 0 && mode_byte != 1) corrupt("bad encoder mode");
  const auto mode = static_cast<EncoderMode>(mode_byte);
  const uint32_t t = get_u32(in);
  const uint32_t submodels = get_u32(in);
  if (classes < 2) corrupt("bad class count");
  if (features == 0 || t == 0) corrupt("bad encoder geometry");
  if (submodels == 0) corrupt("no submodels");

  std::vector<double> thresholds(static_cast<size_t>(features) * t);
  for (double& thr : thresholds) thr = get_f64(in);

  BinaryEnsemble model;
  model.encoder =
      ThermometerEncoder::from_thresholds(t, mode, features,
                                          std::move(thresholds));
  for (uint32_t c = 0; c < classes; ++c) {
    model.class_names.push_back(std::to_string(c));
  }
  const size_t encoded_bits = model.encoder.encoded_width();

  for (uint32_t s = 0; s < submodels; ++s) {
    const uint32_t n = get_u32(in);
    const uint32_t m = get_u32(in);
    const uint32_t k = get_u32(in);
    const uint64_t mapping_seed = get_u64(in);
    const uint64_t hash_seed = get_u64(in);
    Submodel<BinaryFilter> sm;
    try {
      sm.mapping = InputMapping::generate(encoded_bits, n, mapping_seed);
      sm.bank = HashBank::generate(hash_seed, n, m, k);
    } catch (const std::invalid_argument& e) {
      corrupt(e.what());
    }
    const size_t n_filters = sm.mapping.num_filters();
    const size_t entries = size_t{1} << m;
    for (uint32_t c = 0; c < classes; ++c) {
      Discriminator<BinaryFilter> disc;
      disc.kept = BitVector(n_filters);
      get_bits(in, n_filters,
               [&](size_t f, bool v) { disc.kept.set(f, v); });
      disc.bias = static_cast<int32_t>(get_u32(in));
      disc.filters.assign(n_filters, BinaryFilter(entries));
      for (size_t f = 0; f < n_filters; ++f) {
        if (!disc.kept.get(f)) continue;
        get_bits(in, entries,
                 [&](size_t e, bool v) { disc.filters[f].set_bit(e, v); });
      }
      sm.discriminators.push_back(std::move(disc));
    }
    model.submodels.push_back(std::move(sm));
  }
  if (in.peek() != EOF) corrupt("trailing bytes");
  return model;
}

BinaryEnsemble load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return load(in);
}

}  // namespace uleen
