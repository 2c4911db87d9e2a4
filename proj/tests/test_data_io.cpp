#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "doctest.h"
#include "sdd/data_io.hpp"
#include "sdd/errors.hpp"
#include "support.hpp"

using namespace sdd;

namespace {

Dataset pixel_dataset() {
  Dataset ds;
  ds.input_dim = 6;  // 2 x 3 images
  ds.num_classes = 10;
  for (int i = 0; i < 4; ++i) {
    for (int p = 0; p < 6; ++p) ds.features.push_back(static_cast<float>((i * 37 + p * 41) % 256) / 255.0f);
    ds.labels.push_back(i * 3 % 10);
  }
  return ds;
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

}  // namespace

TEST_CASE("IDX files round-trip through the loader") {
  testing::TempDir tmp("idx");
  const auto ds = pixel_dataset();
  const auto img = encode_idx_images(ds, 2, 3);
  const auto lab = encode_idx_labels(ds);
  CHECK(img.size() == 16 + 24);
  CHECK(lab.size() == 8 + 4);
  // Big-endian magic and counts.
  CHECK(img[2] == 0x08);
  CHECK(img[3] == 0x03);
  CHECK(img[7] == 4);
  CHECK(lab[3] == 0x01);
  write_bytes(tmp / "img", img);
  write_bytes(tmp / "lab", lab);
  const auto back = load_mnist(tmp / "img", tmp / "lab");
  CHECK(back.input_dim == 6);
  CHECK(back.labels == ds.labels);
  for (std::size_t i = 0; i < ds.features.size(); ++i) CHECK(back.features[i] == ds.features[i]);
}

TEST_CASE("malformed IDX input gets distinct error codes") {
  testing::TempDir tmp("idx_bad");
  const auto ds = pixel_dataset();
  auto img = encode_idx_images(ds, 2, 3);
  auto lab = encode_idx_labels(ds);
  write_bytes(tmp / "lab", lab);

  auto bad = img;
  bad[3] = 0x09;
  write_bytes(tmp / "img", bad);
  CHECK(error_code([&] { load_mnist(tmp / "img", tmp / "lab"); }) == "bad_magic");
  try {
    load_mnist(tmp / "img", tmp / "lab");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
  }

  auto cut = img;
  cut.resize(cut.size() - 5);
  write_bytes(tmp / "img", cut);
  CHECK(error_code([&] { load_mnist(tmp / "img", tmp / "lab"); }) == "truncated");

  write_bytes(tmp / "img", img);
  auto fewer = pixel_dataset();
  fewer.labels.pop_back();
  fewer.features.resize(fewer.features.size() - 6);
  write_bytes(tmp / "lab", encode_idx_labels(fewer));
  CHECK(error_code([&] { load_mnist(tmp / "img", tmp / "lab"); }) == "count_mismatch");

  CHECK(error_code([&] { load_mnist(tmp / "nope", tmp / "lab"); }) == "missing_artifact");
}

TEST_CASE("synthetic blobs are balanced, bounded and seeded") {
  const auto a = make_synthetic(301, 5, 4, 3.0, 12);
  const auto b = make_synthetic(301, 5, 4, 3.0, 12);
  const auto c = make_synthetic(301, 5, 4, 3.0, 13);
  CHECK(a.features == b.features);
  CHECK(a.features != c.features);
  CHECK_NOTHROW(a.validate());
  std::vector<int> counts(4, 0);
  for (auto y : a.labels) ++counts[y];
  CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
  CHECK(*std::min_element(a.features.begin(), a.features.end()) >= 0.0f);
  CHECK(*std::max_element(a.features.begin(), a.features.end()) <= 1.0f);
}

TEST_CASE("subsets") {
  const auto ds = make_synthetic(100, 3, 2, 2.0, 1);
  const auto first = subset_first(ds, 10);
  CHECK(first.size() == 10);
  CHECK(std::equal(first.labels.begin(), first.labels.end(), ds.labels.begin()));

  const auto s1 = subset_sample(ds, 20, 5);
  const auto s2 = subset_sample(ds, 20, 5);
  CHECK(s1.features == s2.features);
  CHECK(s1.size() == 20);
  CHECK_THROWS_AS(subset_first(ds, 101), InvalidArgument);
  CHECK_THROWS_AS(subset_sample(ds, 101, 1), InvalidArgument);
  CHECK(subset_first(ds, 0).size() == 100);
}

TEST_CASE("batch plans cover every index once and keep the partial tail") {
  const auto plan = batch_indices(103, 10, 8);
  REQUIRE(plan.size() == 11);
  CHECK(plan.back().size() == 3);
  std::set<std::size_t> all;
  for (const auto& b : plan) all.insert(b.begin(), b.end());
  CHECK(all.size() == 103);
  CHECK(batch_indices(103, 10, 8) == plan);
  CHECK(batch_indices(103, 10, 9) != plan);
  CHECK_THROWS_AS(batch_indices(10, 0, 1), InvalidArgument);
}

TEST_CASE("gather copies rows in order") {
  const auto ds = make_synthetic(20, 4, 2, 2.0, 3);
  const std::vector<std::size_t> idx = {5, 0, 19};
  const auto b = gather(ds, idx);
  CHECK(b.size() == 3);
  CHECK(b.labels[0] == ds.labels[5]);
  CHECK(b.features[4] == ds.features[0]);
  CHECK(b.features[8 + 3] == ds.features[19 * 4 + 3]);
}

TEST_CASE("validate rejects bad labels and non-finite features") {
  auto ds = make_synthetic(10, 2, 2, 2.0, 3);
  ds.labels[0] = 2;
  CHECK_THROWS_AS(ds.validate(), InvalidArgument);
  ds.labels[0] = 0;
  ds.features[1] = std::nanf("");
  CHECK_THROWS_AS(ds.validate(), InvalidArgument);
}
