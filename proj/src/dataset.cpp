#include "uleen/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

#include "uleen/rng.hpp"

namespace uleen {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

// gzopen reads plain files transparently, so one path serves both.
std::vector<uint8_t> read_bytes(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) fail(path, "cannot open");
  std::vector<uint8_t> out;
  uint8_t buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) {
    out.insert(out.end(), buf, buf + n);
  }
  if (n < 0) {
    int errnum = 0;
    std::string msg = gzerror(f, &errnum);
    gzclose(f);
    fail(path, "decompression failed: " + msg);
  }
  gzclose(f);
  return out;
}

uint32_t be32(const std::vector<uint8_t>& b, size_t off) {
  return (uint32_t{b[off]} << 24) | (uint32_t{b[off + 1]} << 16) |
         (uint32_t{b[off + 2]} << 8) | uint32_t{b[off + 3]};
}

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

namespace {

struct IdxImages {
  size_t count = 0;
  size_t rows = 0;
  size_t cols = 0;
  std::vector<uint8_t> bytes;  // whole file, pixels from offset 16
};

IdxImages read_idx_images(const std::string& images_path) {
  IdxImages img;
  img.bytes = read_bytes(images_path);
  if (img.bytes.size() < 16) fail(images_path, "truncated header");
  if (be32(img.bytes, 0) != kIdxImagesMagic) fail(images_path, "bad IDX magic");
  img.count = be32(img.bytes, 4);
  img.rows = be32(img.bytes, 8);
  img.cols = be32(img.bytes, 12);
  if (img.bytes.size() != 16 + img.count * img.rows * img.cols) {
    fail(images_path, "truncated image data");
  }
  return img;
}

}  // namespace

Matrix load_idx_images(const std::string& images_path) {
  const IdxImages img = read_idx_images(images_path);
  Matrix features(img.count, img.rows * img.cols);
  for (size_t i = 0; i < features.values.size(); ++i) {
    features.values[i] = static_cast<double>(img.bytes[16 + i]);
  }
  return features;
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  const IdxImages img = read_idx_images(images_path);
  const size_t count = img.count;
  const size_t rows = img.rows;
  const size_t cols = img.cols;

  const auto lab = read_bytes(labels_path);
  if (lab.size() < 8) fail(labels_path, "truncated header");
  if (be32(lab, 0) != kIdxLabelsMagic) fail(labels_path, "bad IDX magic");
  const size_t label_count = be32(lab, 4);
  if (lab.size() != 8 + label_count) fail(labels_path, "truncated label data");
  if (label_count != count) {
    fail(labels_path, "label count does not match image count");
  }

  Dataset ds;
  ds.features = Matrix(count, rows * cols);
  ds.image_rows = rows;
  ds.image_cols = cols;
  for (size_t i = 0; i < count * rows * cols; ++i) {
    ds.features.values[i] = static_cast<double>(img.bytes[16 + i]);
  }
  ds.labels.resize(count);
  uint32_t max_label = 0;
  for (size_t i = 0; i < count; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  for (uint32_t c = 0; c <= max_label; ++c) {
    ds.class_names.push_back(std::to_string(c));
  }
  ds.tags.assign(count, Split::kTrain);
  return ds;
}

namespace {

std::vector<std::vector<std::string>> parse_csv_text(const std::string& path,
                                                     const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A record of one empty field is a blank line; skip it.
    if (record.size() > 1 || !record[0].empty()) {
      records.push_back(std::move(record));
    }
    record.clear();
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) fail(path, "unterminated quoted field");
  if (field_started || !record.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_record();
  }
  return records;
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column, bool header) {
  const auto bytes = read_bytes(path);
  const std::string text(bytes.begin(), bytes.end());
  auto records = parse_csv_text(path, text);
  if (header && !records.empty()) records.erase(records.begin());
  if (records.empty()) fail(path, "no data rows");

  const size_t ncols = records[0].size();
  if (ncols < 2) fail(path, "need a label column and at least one feature");
  const long resolved = label_column >= 0
                            ? label_column
                            : static_cast<long>(ncols) + label_column;
  if (resolved < 0 || resolved >= static_cast<long>(ncols)) {
    fail(path, "label column out of range");
  }
  const size_t label = static_cast<size_t>(resolved);

  Dataset ds;
  ds.features = Matrix(records.size(), ncols - 1);
  ds.labels.resize(records.size());
  std::map<std::string, uint32_t> name_to_class;

  for (size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != ncols) {
      fail(path, "row " + std::to_string(r + 1) + " has " +
                     std::to_string(rec.size()) + " fields, expected " +
                     std::to_string(ncols));
    }
    size_t out_col = 0;
    for (size_t c = 0; c < ncols; ++c) {
      if (c == label) {
        if (rec[c].empty()) {
          fail(path, "row " + std::to_string(r + 1) + ": missing label");
        }
        auto [it, inserted] = name_to_class.try_emplace(
            rec[c], static_cast<uint32_t>(ds.class_names.size()));
        if (inserted) ds.class_names.push_back(rec[c]);
        ds.labels[r] = it->second;
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(rec[c].c_str(), &end);
      if (end == rec[c].c_str() || *end != '\0' || !std::isfinite(v)) {
        fail(path, "row " + std::to_string(r + 1) + " column " +
                       std::to_string(c + 1) + ": not a finite number: '" +
                       rec[c] + "'");
      }
      ds.features.at(r, out_col++) = v;
    }
  }
  ds.tags.assign(ds.labels.size(), Split::kTrain);
  return ds;
}

Matrix load_csv_features(const std::string& path, bool header) {
  const auto bytes = read_bytes(path);
  const std::string text(bytes.begin(), bytes.end());
  auto records = parse_csv_text(path, text);
  if (header && !records.empty()) records.erase(records.begin());
  if (records.empty()) fail(path, "no data rows");
  const size_t ncols = records[0].size();
  Matrix features(records.size(), ncols);
  for (size_t r = 0; r < records.size(); ++r) {
    if (records[r].size() != ncols) {
      fail(path, "row " + std::to_string(r + 1) + " has " +
                     std::to_string(records[r].size()) +
                     " fields, expected " + std::to_string(ncols));
    }
    for (size_t c = 0; c < ncols; ++c) {
      char* end = nullptr;
      const double v = std::strtod(records[r][c].c_str(), &end);
      if (end == records[r][c].c_str() || *end != '\0' || !std::isfinite(v)) {
        fail(path, "row " + std::to_string(r + 1) + " column " +
                       std::to_string(c + 1) + ": not a finite number: '" +
                       records[r][c] + "'");
      }
      features.at(r, c) = v;
    }
  }
  return features;
}

void assign_split(Dataset& ds, uint64_t seed, double val_fraction,
                  double test_fraction) {
  const size_t s = ds.size();
  if (s == 0) throw std::runtime_error("split: empty dataset");
  const size_t test_count =
      test_fraction < 0.0
          ? s / 3
          : static_cast<size_t>(
                std::floor(static_cast<double>(s) * test_fraction + 1e-9));
  const size_t train_pool = s - test_count;
  const size_t val_count = static_cast<size_t>(
      std::floor(static_cast<double>(train_pool) * val_fraction + 1e-9));

  const auto perm =
      random_permutation(s, derive_seed(seed, seed_role::kSplit, 0));
  ds.tags.assign(s, Split::kTrain);
  for (size_t p = train_pool; p < s; ++p) ds.tags[perm[p]] = Split::kTest;
  for (size_t p = train_pool - val_count; p < train_pool; ++p) {
    ds.tags[perm[p]] = Split::kVal;
  }
}

void carve_validation(Dataset& ds, uint64_t seed, double val_fraction) {
  std::vector<size_t> train = ds.indices_of(Split::kTrain);
  if (train.empty()) throw std::runtime_error("split: no train samples");
  SplitMix64 rng(derive_seed(seed, seed_role::kSplit, 1));
  shuffle(train, rng);
  const size_t val_count = static_cast<size_t>(std::floor(
      static_cast<double>(train.size()) * val_fraction + 1e-9));
  for (size_t p = train.size() - val_count; p < train.size(); ++p) {
    ds.tags[train[p]] = Split::kVal;
  }
}

Dataset concat_train_test(const Dataset& train, const Dataset& test) {
  if (train.num_features() != test.num_features()) {
    throw std::runtime_error("concat: feature count mismatch");
  }
  Dataset out = train;
  out.tags.assign(train.size(), Split::kTrain);
  for (uint32_t lab : test.labels) {
    const std::string& name = lab < test.class_names.size()
                                  ? test.class_names[lab]
                                  : std::to_string(lab);
    if (std::find(out.class_names.begin(), out.class_names.end(), name) ==
        out.class_names.end()) {
      out.class_names.push_back(name);
    }
  }
  out.features.values.insert(out.features.values.end(),
                             test.features.values.begin(),
                             test.features.values.end());
  out.features.rows += test.size();
  for (size_t i = 0; i < test.size(); ++i) {
    const std::string& name = test.class_names[test.labels[i]];
    const auto it =
        std::find(out.class_names.begin(), out.class_names.end(), name);
    out.labels.push_back(
        static_cast<uint32_t>(it - out.class_names.begin()));
    out.tags.push_back(Split::kTest);
  }
  return out;
}

}  // namespace uleen
