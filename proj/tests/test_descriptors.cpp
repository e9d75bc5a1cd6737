#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nucleifuse/descriptors.hpp"
#include "nucleifuse/error.hpp"
#include "nucleifuse/rng.hpp"
#include "nucleifuse/synthetic.hpp"
#include "oracles.hpp"

using namespace nucleifuse;
using namespace nucleifuse::descriptors;

namespace {

ImagePatch random_patch(Rng& rng, bool few_levels) {
  ImagePatch p;
  for (auto& v : p.pixels) {
    v = few_levels ? static_cast<std::uint8_t>(rng.below(3) * 127) : static_cast<std::uint8_t>(rng.below(256));
  }
  return p;
}

RgbImage random_rgb(Rng& rng, int h, int w, bool few_levels) {
  RgbImage img(h, w);
  for (auto& v : img.pixels) {
    v = few_levels ? static_cast<std::uint8_t>(rng.below(3) * 127) : static_cast<std::uint8_t>(rng.below(256));
  }
  return img;
}

ImagePatch rotate90(const ImagePatch& p) {
  ImagePatch out = p;
  for (int r = 0; r < kPatchSize; ++r) {
    for (int c = 0; c < kPatchSize; ++c) {
      for (int ch = 0; ch < 3; ++ch) out.at(kPatchSize - 1 - c, r, ch) = p.at(r, c, ch);
    }
  }
  return out;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_SUITE("descriptors") {
  TEST_CASE("widths") {
    CHECK(dimension(DescriptorId::HOG) == 256);
    CHECK(dimension(DescriptorId::LBP) == 59);
    CHECK(dimension(DescriptorId::BOVW) == 100);
    CHECK(dimension(DescriptorId::SURF) == 1216);
    CHECK(dimension(DescriptorId::LDEP) == 24);
    CHECK(dimension(DescriptorId::LWP) == 256);
    CHECK(dimension(DescriptorId::LCOD) == 256);
    CHECK(dimension(DescriptorId::RSHD) == 320);
    CHECK(dimension(DescriptorId::LBDP) == 256);
    std::size_t total = 0;
    for (auto id : kAllDescriptors) total += dimension(id);
    CHECK(total == 2743);
    CHECK(parse_descriptor("RSHD") == DescriptorId::RSHD);
    CHECK_FALSE(parse_descriptor("sift").has_value());
  }

  TEST_CASE("luma of pure red") {
    RgbImage img(1, 1);
    img.at(0, 0, 0) = 255;
    CHECK(grayscale(img).at(0, 0) == doctest::Approx(76.245).epsilon(1e-12));
  }

  TEST_CASE("uniform LBP table agrees with run enumeration") {
    const auto& table = uniform_lbp_table();
    int uniform = 0;
    for (int code = 0; code < 256; ++code) {
      CHECK(table[static_cast<std::size_t>(code)] == oracle::uniform_bin(code));
      uniform += table[static_cast<std::size_t>(code)] < 58;
    }
    CHECK(uniform == 58);
    CHECK(table[0] == 0);
    CHECK(table[255] == 57);
  }

  TEST_CASE("local patterns match naive re-derivations") {
    Rng rng(17);
    for (int t = 0; t < 60; ++t) {
      const int h = 5 + t % 3, w = 5 + (t / 3) % 3;
      const auto g = grayscale(random_rgb(rng, h, w, t % 2 == 0));
      CHECK(lbp(g).values == oracle::lbp(g));
      CHECK(ldep(g).values == oracle::ldep(g));
      CHECK(lwp(g).values == oracle::lwp(g));
      CHECK(lbdp(g).values == oracle::lbdp(g));
    }
  }

  TEST_CASE("flat patch puts LBP mass in the all-ones code") {
    ImagePatch p;
    p.pixels.fill(90);
    const auto h = lbp(p).values;
    CHECK(h[57] == doctest::Approx(1.0));
    CHECK(sum(h) == doctest::Approx(1.0));
  }

  TEST_CASE("raster smaller than 3x3 is rejected") {
    GrayImage g(2, 5);
    CHECK_THROWS_AS(lbp(g), InputError);
    CHECK_THROWS_AS(ldep(g), InputError);
  }

  TEST_CASE("histogram descriptors are normalised") {
    Rng rng(3);
    const auto p = random_patch(rng, false);
    for (auto fv : {lbp(p), ldep(p), lwp(p), lbdp(p), lcod(p), rshd(p)}) {
      CHECK(fv.values.size() == dimension(fv.descriptor));
      CHECK(sum(fv.values) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(*std::min_element(fv.values.begin(), fv.values.end()) >= 0.0);
    }
  }

  TEST_CASE("LCOD and RSHD are invariant to quarter turns") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
      auto p = random_patch(rng, t % 2 == 1);
      const auto a = lcod(p).values, b = rshd(p).values;
      for (int k = 0; k < 3; ++k) {
        p = rotate90(p);
        const auto a2 = lcod(p).values, b2 = rshd(p).values;
        for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(a[i] - a2[i]) <= 1e-9);
        for (std::size_t i = 0; i < b.size(); ++i) REQUIRE(std::abs(b[i] - b2[i]) <= 1e-9);
      }
    }
  }

  TEST_CASE("colour shade quantisers") {
    CHECK(lcod_shade(255, 255, 255) == 255);
    CHECK(lcod_shade(0, 0, 0) == 0);
    CHECK(lcod_shade(32, 0, 64) == 33);
    CHECK(rshd_shade(255, 255, 255) == 63);
    CHECK(rshd_shade(64, 0, 0) == 16);
  }

  TEST_CASE("HoG orientation of step edges") {
    GrayImage vertical(27, 27), horizontal(27, 27);
    for (int r = 0; r < 27; ++r) {
      for (int c = 0; c < 27; ++c) {
        vertical.at(r, c) = c >= 13 ? 200.0 : 20.0;
        horizontal.at(r, c) = r >= 13 ? 200.0 : 20.0;
      }
    }
    auto bin_mass = [](const std::vector<double>& v, int bin) {
      double m = 0;
      for (std::size_t i = static_cast<std::size_t>(bin); i < v.size(); i += kHogBins) m += v[i];
      return m;
    };
    const auto hv = hog(vertical).values;
    const auto hh = hog(horizontal).values;
    REQUIRE(hv.size() == 256);
    CHECK(bin_mass(hv, 0) > 0.0);
    for (int b = 1; b < kHogBins; ++b) CHECK(bin_mass(hv, b) == 0.0);
    CHECK(bin_mass(hh, 4) > 0.0);
    CHECK(bin_mass(hh, 0) == 0.0);
    for (double v : hv) CHECK(v >= 0.0);
  }

  TEST_CASE("HoG blocks are unit length or empty") {
    Rng rng(12);
    const auto v = hog(random_patch(rng, false)).values;
    for (std::size_t b = 0; b < v.size(); b += 32) {
      double sq = 0;
      for (std::size_t i = b; i < b + 32; ++i) sq += v[i] * v[i];
      CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("bilinear upsampling keeps flat images flat") {
    GrayImage g(5, 7, 42.0);
    const auto up = upsample2x(g);
    CHECK(up.height == 10);
    CHECK(up.width == 14);
    for (double v : up.values) CHECK(v == doctest::Approx(42.0));
  }

  TEST_CASE("SURF-like descriptor") {
    ImagePatch flat;
    flat.pixels.fill(128);
    const auto none = surf_like(flat).values;
    CHECK(none.size() == 1216);
    CHECK(sum(none) == 0.0);

    const auto patches = synthetic::make_patches(2, 5);
    for (const auto& p : patches) {
      const auto v = surf_like(p).values;
      REQUIRE(v.size() == 1216);
      const auto kps = detect_keypoints(grayscale(p));
      CHECK(kps.size() >= 1);
      for (std::size_t k = 1; k < kps.size(); ++k) CHECK(kps[k - 1].response >= kps[k].response);
      const std::size_t used = std::min(kps.size(), kSurfMaxKeypoints);
      for (std::size_t k = 0; k < kSurfMaxKeypoints; ++k) {
        double sq = 0;
        for (std::size_t i = 0; i < 64; ++i) sq += v[k * 64 + i] * v[k * 64 + i];
        if (k < used) {
          CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-9));
        } else {
          CHECK(sq == 0.0);
        }
      }
    }
  }

  TEST_CASE("k-means recovers separated blobs") {
    Rng rng(4);
    Matrix pts(90, 2);
    const double centres[3][2] = {{0, 0}, {20, 0}, {0, 20}};
    for (std::size_t i = 0; i < 90; ++i) {
      pts(i, 0) = centres[i % 3][0] + rng.normal();
      pts(i, 1) = centres[i % 3][1] + rng.normal();
    }
    const auto res = kmeans(pts, {3, 100, 1});
    for (std::size_t i = 3; i < 90; ++i) CHECK(res.assignment[i] == res.assignment[i % 3]);
    CHECK(res.assignment[0] != res.assignment[1]);
    CHECK(res.assignment[1] != res.assignment[2]);
    CHECK(res.assignment[0] != res.assignment[2]);
  }

  TEST_CASE("BoVW encodes a flat patch as one word") {
    BovwCodebook cb;
    cb.centers = Matrix(kBovwWords, kBovwBins, 1.0);
    for (std::size_t j = 0; j < kBovwBins; ++j) cb.centers(7, j) = 0.0;
    ImagePatch flat;
    flat.pixels.fill(70);
    const auto v = bovw_encode(flat, cb).values;
    CHECK(v[7] == 1.0);
    CHECK(sum(v) == 1.0);
  }

  TEST_CASE("BoVW fit needs enough local descriptors") {
    const auto few = synthetic::make_patches(2, 1);
    CHECK_THROWS_AS(bovw_fit(few, 0), InputError);
    const auto enough = synthetic::make_patches(4, 1);
    const auto cb = bovw_fit(enough, 0);
    CHECK(cb.centers.rows() == 100);
    CHECK(cb.centers.cols() == 8);
  }

  TEST_CASE("parallel extraction matches serial extraction") {
    const auto patches = synthetic::make_patches(5, 2);
    const auto cb = bovw_fit(patches, 3);
    const auto one = extract_all(patches, &cb, kAllDescriptors, 1);
    const auto three = extract_all(patches, &cb, kAllDescriptors, 3);
    for (auto id : kAllDescriptors) {
      CHECK(one.at(id).values == three.at(id).values);
      CHECK(one.at(id).cols() == dimension(id));
      CHECK(one.at(id).source_id() == std::string(name(id)));
    }
    const std::array only_bovw = {DescriptorId::BOVW};
    CHECK_THROWS_AS(extract_all(patches, nullptr, only_bovw, 1), DependencyError);
  }
}
