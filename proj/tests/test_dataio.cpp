#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <zlib.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "uleen/dataset.hpp"

using namespace uleen;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "uleen_dataio_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  fs::path p = temp_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  return p.string();
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

std::vector<uint8_t> idx_images(const std::vector<std::vector<uint8_t>>& imgs,
                                uint32_t rows, uint32_t cols) {
  std::vector<uint8_t> out;
  put_be32(out, 0x00000803);
  put_be32(out, static_cast<uint32_t>(imgs.size()));
  put_be32(out, rows);
  put_be32(out, cols);
  for (const auto& img : imgs) out.insert(out.end(), img.begin(), img.end());
  return out;
}

std::vector<uint8_t> idx_labels(const std::vector<uint8_t>& labels) {
  std::vector<uint8_t> out;
  put_be32(out, 0x00000801);
  put_be32(out, static_cast<uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::string write_bytes(const std::string& name,
                        const std::vector<uint8_t>& bytes) {
  fs::path p = temp_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.close();
  return p.string();
}

std::string write_gz(const std::string& name,
                     const std::vector<uint8_t>& bytes) {
  fs::path p = temp_dir() / name;
  gzFile f = gzopen(p.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  REQUIRE(gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) ==
          static_cast<int>(bytes.size()));
  gzclose(f);
  return p.string();
}

}  // namespace

TEST_CASE("idx pairs load pixels and labels") {
  const std::vector<std::vector<uint8_t>> imgs = {
      {0, 10, 20, 255}, {1, 2, 3, 4}, {9, 8, 7, 6}};
  auto images_path = write_bytes("t1-images", idx_images(imgs, 2, 2));
  auto labels_path = write_bytes("t1-labels", idx_labels({1, 0, 1}));

  Dataset ds = load_idx(images_path, labels_path);
  CHECK(ds.size() == 3);
  CHECK(ds.num_features() == 4);
  CHECK(ds.image_rows == 2);
  CHECK(ds.image_cols == 2);
  CHECK(ds.features.at(0, 3) == 255.0);
  CHECK(ds.features.at(2, 0) == 9.0);
  CHECK(ds.labels == std::vector<uint32_t>{1, 0, 1});
  CHECK(ds.class_names == std::vector<std::string>{"0", "1"});
  for (auto tag : ds.tags) CHECK(tag == Split::kTrain);

  Dataset again = load_idx(images_path, labels_path);
  CHECK(again.features.values == ds.features.values);
  CHECK(again.labels == ds.labels);
}

TEST_CASE("gzipped idx files load identically") {
  const std::vector<std::vector<uint8_t>> imgs = {{5, 6}, {7, 8}};
  auto plain_img = write_bytes("t2-images", idx_images(imgs, 1, 2));
  auto plain_lab = write_bytes("t2-labels", idx_labels({0, 1}));
  auto gz_img = write_gz("t2-images.gz", idx_images(imgs, 1, 2));
  auto gz_lab = write_gz("t2-labels.gz", idx_labels({0, 1}));

  Dataset a = load_idx(plain_img, plain_lab);
  Dataset b = load_idx(gz_img, gz_lab);
  CHECK(a.features.values == b.features.values);
  CHECK(a.labels == b.labels);
}

TEST_CASE("idx loading surfaces malformed files") {
  const std::vector<std::vector<uint8_t>> imgs = {{1, 2, 3, 4}};
  auto good_img = write_bytes("t3-images", idx_images(imgs, 2, 2));
  auto good_lab = write_bytes("t3-labels", idx_labels({0}));

  auto bad_magic = idx_images(imgs, 2, 2);
  bad_magic[3] = 0x99;
  auto bad_magic_path = write_bytes("t3-badmagic", bad_magic);
  CHECK_THROWS_WITH_AS(load_idx(bad_magic_path, good_lab),
                       doctest::Contains("magic"), std::runtime_error);

  auto truncated = idx_images(imgs, 2, 2);
  truncated.resize(truncated.size() - 2);
  auto trunc_path = write_bytes("t3-trunc", truncated);
  CHECK_THROWS_WITH_AS(load_idx(trunc_path, good_lab),
                       doctest::Contains("truncated"), std::runtime_error);

  auto extra_labels = write_bytes("t3-extralab", idx_labels({0, 1}));
  CHECK_THROWS_WITH_AS(load_idx(good_img, extra_labels),
                       doctest::Contains("count"), std::runtime_error);

  CHECK_THROWS_AS(load_idx((temp_dir() / "missing").string(), good_lab),
                  std::runtime_error);

  auto label_magic = idx_labels({0});
  label_magic[3] = 0x07;
  auto label_magic_path = write_bytes("t3-labmagic", label_magic);
  CHECK_THROWS_WITH_AS(load_idx(good_img, label_magic_path),
                       doctest::Contains("magic"), std::runtime_error);
}

TEST_CASE("unlabeled idx images load as a feature matrix") {
  const std::vector<std::vector<uint8_t>> imgs = {{1, 2, 3, 4}, {5, 6, 7, 8}};
  auto path = write_bytes("t4-images", idx_images(imgs, 2, 2));
  Matrix m = load_idx_images(path);
  CHECK(m.rows == 2);
  CHECK(m.cols == 4);
  CHECK(m.at(1, 2) == 7.0);
}

TEST_CASE("csv labels map in first-appearance order") {
  auto path = write_file("t5.csv",
                         "5.1,3.5,setosa\n"
                         "7.0,3.2,versicolor\n"
                         "4.9,3.0,setosa\n"
                         "6.3,3.3,virginica\n");
  Dataset ds = load_csv(path, -1, false);
  CHECK(ds.size() == 4);
  CHECK(ds.num_features() == 2);
  CHECK(ds.class_names ==
        std::vector<std::string>{"setosa", "versicolor", "virginica"});
  CHECK(ds.labels == std::vector<uint32_t>{0, 1, 0, 2});
  CHECK(ds.features.at(0, 0) == 5.1);
  CHECK(ds.features.at(3, 1) == 3.3);
}

TEST_CASE("csv respects headers, quoting and crlf line ends") {
  auto path = write_file("t6.csv",
                         "a,b,label\r\n"
                         "1.0,\"2.5\",\"first, class\"\r\n"
                         "\"3.5\",4.0,\"say \"\"hi\"\"\"\r\n"
                         "\r\n"
                         "5.0,6.0,\"first, class\"\n");
  // Quoted cells may hold commas and escaped quotes; blank lines are skipped.
  Dataset ds = load_csv(path, 2, true);
  CHECK(ds.size() == 3);
  CHECK(ds.num_features() == 2);
  CHECK(ds.features.at(0, 1) == 2.5);
  CHECK(ds.features.at(1, 0) == 3.5);
  CHECK(ds.class_names.size() == 2);
  CHECK(ds.class_names[0] == "first, class");
  CHECK(ds.class_names[1] == "say \"hi\"");
  CHECK(ds.labels == std::vector<uint32_t>{0, 1, 0});
}

TEST_CASE("csv label column may count from the end") {
  auto path = write_file("t7.csv", "x,1.0,2.0\ny,3.0,4.0\n");
  Dataset front = load_csv(path, 0, false);
  CHECK(front.class_names == std::vector<std::string>{"x", "y"});
  CHECK(front.features.at(1, 0) == 3.0);

  Dataset back = load_csv(path, -3, false);
  CHECK(back.class_names == front.class_names);
  CHECK(back.features.values == front.features.values);
}

TEST_CASE("csv ingestion rejects malformed content") {
  auto bad_cell = write_file("t8a.csv", "1.0,two,label\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_cell, -1, false),
                       doctest::Contains("row"), std::runtime_error);

  auto bad_quote = write_file("t8b.csv", "1.0,\"open,label\n");
  CHECK_THROWS_AS(load_csv(bad_quote, -1, false), std::runtime_error);

  auto ragged = write_file("t8c.csv", "1.0,2.0,a\n1.0,b\n");
  CHECK_THROWS_AS(load_csv(ragged, -1, false), std::runtime_error);

  auto empty = write_file("t8d.csv", "");
  CHECK_THROWS_AS(load_csv(empty, -1, false), std::runtime_error);

  auto col_oob = write_file("t8e.csv", "1.0,2.0,a\n");
  CHECK_THROWS_AS(load_csv(col_oob, 3, false), std::runtime_error);
  CHECK_THROWS_AS(load_csv(col_oob, -4, false), std::runtime_error);

  auto nonfinite = write_file("t8f.csv", "nan,2.0,a\n");
  CHECK_THROWS_AS(load_csv(nonfinite, -1, false), std::runtime_error);
}

TEST_CASE("single-row csv loads one sample") {
  auto path = write_file("t9.csv", "1.5,2.5,only\n");
  Dataset ds = load_csv(path, -1, false);
  CHECK(ds.size() == 1);
  CHECK(ds.num_classes() == 1);
}

TEST_CASE("csv feature loading without labels") {
  auto path = write_file("t10.csv", "f1,f2\n1.0,2.0\n3.0,4.0\n");
  Matrix m = load_csv_features(path, true);
  CHECK(m.rows == 2);
  CHECK(m.cols == 2);
  CHECK(m.at(1, 1) == 4.0);
}

TEST_CASE("default split carves one third for test") {
  Dataset ds;
  ds.features = Matrix(150, 2);
  ds.labels.assign(150, 0);
  ds.class_names = {"a", "b"};
  ds.tags.assign(150, Split::kTrain);
  for (size_t i = 0; i < 150; ++i) ds.labels[i] = i % 2;

  assign_split(ds, 42);
  size_t train = 0, val = 0, test = 0;
  for (auto tag : ds.tags) {
    if (tag == Split::kTrain) ++train;
    if (tag == Split::kVal) ++val;
    if (tag == Split::kTest) ++test;
  }
  CHECK(test == 50);
  CHECK(val == 10);   // 10% of the 100-sample train pool
  CHECK(train == 90);
  CHECK(train + val + test == 150);

  Dataset ds2 = ds;
  for (auto& tag : ds2.tags) tag = Split::kTrain;
  assign_split(ds2, 42);
  CHECK(ds2.tags == ds.tags);

  Dataset ds3 = ds;
  for (auto& tag : ds3.tags) tag = Split::kTrain;
  assign_split(ds3, 43);
  CHECK(ds3.tags != ds.tags);
}

TEST_CASE("split honors a custom test fraction") {
  Dataset ds;
  ds.features = Matrix(150, 1);
  ds.labels.assign(150, 0);
  ds.class_names = {"a"};
  ds.tags.assign(150, Split::kTrain);

  assign_split(ds, 7, 0.0, 0.2);
  CHECK(ds.indices_of(Split::kTest).size() == 30);
  CHECK(ds.indices_of(Split::kVal).empty());
  CHECK(ds.indices_of(Split::kTrain).size() == 120);
}

TEST_CASE("explicit test sets keep their tags while validation is carved") {
  Dataset train;
  train.features = Matrix(60, 3);
  train.labels.assign(60, 0);
  train.class_names = {"a", "b"};
  train.tags.assign(60, Split::kTrain);
  for (size_t i = 0; i < 60; ++i) train.labels[i] = i % 2;

  Dataset test;
  test.features = Matrix(40, 3);
  test.labels.assign(40, 1);
  test.class_names = {"a", "b"};
  test.tags.assign(40, Split::kTrain);

  Dataset merged = concat_train_test(train, test);
  CHECK(merged.size() == 100);
  CHECK(merged.indices_of(Split::kTrain).size() == 60);
  CHECK(merged.indices_of(Split::kTest).size() == 40);

  carve_validation(merged, 13, 0.10);
  CHECK(merged.indices_of(Split::kTest).size() == 40);
  CHECK(merged.indices_of(Split::kVal).size() == 6);
  CHECK(merged.indices_of(Split::kTrain).size() == 54);
  // Test rows sit after the train block and are untouched.
  for (size_t i = 60; i < 100; ++i) CHECK(merged.tags[i] == Split::kTest);
}

TEST_CASE("concat requires matching shapes and merges class names") {
  Dataset train;
  train.features = Matrix(2, 2);
  train.labels = {0, 1};
  train.class_names = {"a", "b"};
  train.tags.assign(2, Split::kTrain);

  Dataset test;
  test.features = Matrix(1, 2);
  test.labels = {2};
  test.class_names = {"a", "b", "c"};
  test.tags.assign(1, Split::kTrain);

  Dataset merged = concat_train_test(train, test);
  CHECK(merged.class_names == std::vector<std::string>{"a", "b", "c"});
  CHECK(merged.labels == std::vector<uint32_t>{0, 1, 2});

  Dataset wrong;
  wrong.features = Matrix(1, 3);
  wrong.labels = {0};
  wrong.class_names = {"a"};
  wrong.tags.assign(1, Split::kTrain);
  CHECK_THROWS_AS(concat_train_test(train, wrong), std::runtime_error);
}

TEST_CASE("every sample carries exactly one tag after splitting") {
  for (uint64_t seed : {1ull, 9ull, 1234ull}) {
    Dataset ds;
    ds.features = Matrix(101, 1);
    ds.labels.assign(101, 0);
    ds.class_names = {"a"};
    ds.tags.assign(101, Split::kTrain);
    assign_split(ds, seed);

    const size_t test = ds.indices_of(Split::kTest).size();
    const size_t val = ds.indices_of(Split::kVal).size();
    const size_t train = ds.indices_of(Split::kTrain).size();
    CHECK(test == 33);  // floor(101/3)
    CHECK(val == 6);    // floor(0.1 * 68)
    CHECK(train + val + test == 101);
  }
}

TEST_CASE("the bundled iris csv has the expected shape") {
  const char* repo = std::getenv("ULEEN_REPO");
  REQUIRE(repo != nullptr);
  Dataset ds = load_csv(std::string(repo) + "/data/uci/iris.csv", -1, false);
  CHECK(ds.size() == 150);
  CHECK(ds.num_features() == 4);
  CHECK(ds.num_classes() == 3);
  for (uint32_t label : ds.labels) CHECK(label < 3);

  assign_split(ds, 5);
  CHECK(ds.indices_of(Split::kTest).size() == 50);
}
