#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "fixtures.hpp"
#include "nucleifuse/dataset.hpp"
#include "nucleifuse/error.hpp"
#include "nucleifuse/rng.hpp"

using namespace nucleifuse;
using namespace nucleifuse::dataset;

namespace {

int reflect101(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

RgbImage random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(h, w);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("class names and CoNSeP merge table") {
    CHECK(class_from_name("Epithelial") == 0);
    CHECK(class_from_name("fibroblast") == 1);
    CHECK(class_from_name("inflammatory") == 2);
    CHECK(class_from_name("others") == 3);
    CHECK_FALSE(class_from_name("necrosis").has_value());

    const std::array<int, 8> expected = {-1, 3, 2, 0, 0, 1, 1, 1};
    for (int code = 0; code <= 7; ++code) {
      const auto merged = merge_consep_label(code);
      if (expected[static_cast<std::size_t>(code)] < 0) {
        CHECK_FALSE(merged.has_value());
      } else {
        CHECK(merged == expected[static_cast<std::size_t>(code)]);
      }
    }
    CHECK_FALSE(merge_consep_label(8).has_value());
  }

  TEST_CASE("patches match a mirror-padding oracle, border centres included") {
    const auto img = random_image(40, 33, 11);
    const std::vector<Center> centers = {{0, 0, 0}, {39, 32, 1}, {20, 16, 2}, {5, 31, 3}};
    const auto patches = extract_patches(img, centers, "img");
    REQUIRE(patches.size() == centers.size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      CHECK(patches[k].label == centers[k].label);
      CHECK(patches[k].row == centers[k].row);
      for (int r = 0; r < kPatchSize; ++r) {
        for (int c = 0; c < kPatchSize; ++c) {
          const int sr = reflect101(centers[k].row - kPatchHalf + r, img.height);
          const int sc = reflect101(centers[k].col - kPatchHalf + c, img.width);
          for (int ch = 0; ch < 3; ++ch) REQUIRE(patches[k].at(r, c, ch) == img.at(sr, sc, ch));
        }
      }
    }
  }

  TEST_CASE("out-of-bounds centre and undersized image are rejected") {
    const auto img = random_image(30, 30, 1);
    const std::vector<Center> bad = {{3, 3, 0}, {30, 2, 0}};
    CHECK_THROWS_WITH_AS(extract_patches(img, bad, "x"), doctest::Contains("1"), InputError);
    const auto tiny = random_image(10, 40, 2);
    const std::vector<Center> one = {{5, 5, 0}};
    CHECK_THROWS_AS(extract_patches(tiny, one, "x"), InputError);
  }

  TEST_CASE("diagonal pixels are one component under 8-connectivity only") {
    ClassMap map(6, 6);
    map.at(1, 1) = 5;
    map.at(2, 2) = 5;
    map.at(4, 4) = 2;
    CHECK(find_components(map, Connectivity::Four).size() == 3);
    const auto eight = find_components(map, Connectivity::Eight);
    REQUIRE(eight.size() == 2);
    CHECK(eight[0].size == 2);
    CHECK(eight[0].centroid_row == doctest::Approx(1.5));
    CHECK(eight[1].label == 2);
  }

  TEST_CASE("CoNSeP class map yields merged labels and drops specks") {
    const auto dir = fixtures::temp_dir("consep_unit");
    fixtures::write_consep(dir);
    const auto patches = extract_from_class_map(load_rgb(dir / "tile.png"), load_class_map(dir / "tile_class.png"), "tile");
    std::vector<int> labels;
    for (const auto& p : patches) labels.push_back(p.label);
    CHECK(labels == std::vector<int>{3, 2, 0, 0, 1, 1, 1});
  }

  TEST_CASE("annotation CSV parsing") {
    const auto dir = fixtures::temp_dir("annotations");
    std::ofstream(dir / "a.csv") << "row,col,class\n3,4,Epithelial\n\n10,12,fibroblast\n";
    const auto centers = read_annotations(dir / "a.csv");
    REQUIRE(centers.size() == 2);
    CHECK(centers[1].row == 10);
    CHECK(centers[1].label == 1);
    std::ofstream(dir / "b.csv") << "1,2,mitosis\n";
    CHECK_THROWS_WITH_AS(read_annotations(dir / "b.csv"), doctest::Contains(":1"), InputError);
    CHECK_THROWS_AS(read_annotations(dir / "missing.csv"), DependencyError);
  }

  TEST_CASE("ADASYN synthetics lie on segments to same-class nearest neighbours") {
    Rng rng(5);
    const std::array<std::size_t, 4> sizes = {40, 25, 15, 9};
    Matrix x(89, 3);
    Labels y;
    std::size_t row = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t i = 0; i < sizes[c]; ++i, ++row) {
        for (std::size_t j = 0; j < 3; ++j) x(row, j) = rng.normal() + (j == c % 3 ? 1.5 : 0.0);
        y.push_back(static_cast<int>(c));
      }
    }
    const auto res = adasyn_balance(x, y, 5, 42);
    REQUIRE(res.original_count == 89);
    for (std::size_t i = 0; i < 89; ++i) {
      for (std::size_t j = 0; j < 3; ++j) REQUIRE(res.samples(i, j) == x(i, j));
    }
    const auto counts = class_counts(res.labels);
    for (std::size_t c = 1; c < 4; ++c) {
      // per-sample rounding keeps the total within one per original sample
      CHECK(static_cast<double>(counts[c]) == doctest::Approx(40.0).epsilon(static_cast<double>(sizes[c]) / 40.0));
    }
    CHECK(counts[0] == 40);

    for (std::size_t s = 0; s < res.origins.size(); ++s) {
      const auto& o = res.origins[s];
      const int label = res.labels[89 + s];
      REQUIRE(y[o.base] == label);
      REQUIRE(y[o.neighbor] == label);
      REQUIRE(o.lambda >= 0.0);
      REQUIRE(o.lambda < 1.0);
      for (std::size_t j = 0; j < 3; ++j) {
        const double expect = x(o.base, j) + o.lambda * (x(o.neighbor, j) - x(o.base, j));
        REQUIRE(res.samples(89 + s, j) == doctest::Approx(expect).epsilon(1e-12));
      }
      // neighbour is among the 5 closest same-class points
      std::vector<std::pair<double, std::size_t>> d;
      for (std::size_t j = 0; j < 89; ++j) {
        if (j == o.base || y[j] != label) continue;
        double s2 = 0;
        for (std::size_t k = 0; k < 3; ++k) s2 += (x(j, k) - x(o.base, k)) * (x(j, k) - x(o.base, k));
        d.emplace_back(s2, j);
      }
      std::sort(d.begin(), d.end());
      bool found = false;
      for (std::size_t k = 0; k < 5; ++k) found = found || d[k].second == o.neighbor;
      REQUIRE(found);
    }

    const auto again = adasyn_balance(x, y, 5, 42);
    CHECK(again.samples == res.samples);
  }

  TEST_CASE("ADASYN leaves a balanced set unchanged") {
    Matrix x(8, 2);
    for (std::size_t i = 0; i < 8; ++i) x(i, 0) = static_cast<double>(i);
    const Labels y = {0, 1, 2, 3, 0, 1, 2, 3};
    const auto res = adasyn_balance(x, y, 1, 0);
    CHECK(res.samples == x);
    CHECK(res.origins.empty());
  }

  TEST_CASE("stratified folds") {
    Labels y;
    for (int c = 0; c < 4; ++c) {
      for (int i = 0; i < 13 + 3 * c; ++i) y.push_back(c);
    }
    const auto folds = make_folds(y, 5, 9);
    REQUIRE(folds.size() == y.size());
    for (int c = 0; c < 4; ++c) {
      std::array<int, 5> per{};
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == c) ++per[folds.bucket_of[i]];
      }
      CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
    }
    std::size_t total = 0;
    for (std::uint32_t f = 0; f < 5; ++f) {
      total += folds.members(f).size();
      CHECK(folds.members(f).size() + folds.non_members(f).size() == y.size());
    }
    CHECK(total == y.size());
    CHECK(make_folds(y, 5, 9).bucket_of == folds.bucket_of);
    CHECK(make_folds(y, 5, 10).bucket_of != folds.bucket_of);
    CHECK_THROWS_AS(make_folds(Labels{0, 0, 1, 1, 2, 2, 3}, 2, 0), InputError);
  }

  TEST_CASE("70/15/15 split proportions per class") {
    Labels y;
    for (int c = 0; c < 4; ++c) {
      for (int i = 0; i < 100; ++i) y.push_back(c);
    }
    const auto split = make_splits(y, {0.70, 0.15, 0.15}, 3);
    CHECK(split.members(0).size() == 280);
    CHECK(split.members(1).size() == 60);
    CHECK(split.members(2).size() == 60);
    CHECK_THROWS_AS(make_splits(y, {0.7, 0.2, 0.2}, 3), InputError);
  }

  TEST_CASE("archive round trip") {
    PatchArchive a;
    a.manifest.name = "unit";
    a.manifest.counts_before = {1, 1, 0, 0};
    a.manifest.counts_after = {1, 1, 0, 0};
    a.manifest.seed = 4;
    const auto img = random_image(30, 30, 3);
    const std::vector<Center> centers = {{14, 14, 0}, {3, 20, 1}};
    a.patches = extract_patches(img, centers, "img_a");
    const auto dir = fixtures::temp_dir("archive");
    write_archive(dir / "arch", a);
    const auto b = read_archive(dir / "arch");
    REQUIRE(b.patches.size() == 2);
    CHECK(b.patches[1].pixels == a.patches[1].pixels);
    CHECK(b.patches[0].source_id == "img_a");
    CHECK(b.labels() == a.labels());
    CHECK(b.manifest.seed == 4);
    CHECK_THROWS_AS(read_archive(dir / "nothing"), DependencyError);
    a.patches[0].source_id = "img,a";
    CHECK_THROWS_AS(write_archive(dir / "comma", a), InputError);
  }
}
