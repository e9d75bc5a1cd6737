#include <doctest.h>

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "nucleifuse/error.hpp"
#include "nucleifuse/reduction.hpp"
#include "nucleifuse/rng.hpp"

using namespace nucleifuse;
using namespace nucleifuse::reduction;

namespace {

Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal() * (1.0 + static_cast<double>(j % 5));
  }
  return m;
}

Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / static_cast<double>(n);
  }
  Matrix c(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      c(a, b) = s / static_cast<double>(n - 1);
    }
  }
  return c;
}

double orthonormality_error(const Matrix& c) {
  double worst = 0;
  for (std::size_t a = 0; a < c.rows(); ++a) {
    for (std::size_t b = 0; b < c.rows(); ++b) {
      double dot = 0;
      for (std::size_t j = 0; j < c.cols(); ++j) dot += c(a, j) * c(b, j);
      worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("reduction") {
  TEST_CASE("points on a diagonal line") {
    Matrix x(4, 2);
    for (std::size_t i = 0; i < 4; ++i) x(i, 0) = x(i, 1) = static_cast<double>(i);
    const auto m = pca_fit(x, 1);
    CHECK(m.components(0, 0) == doctest::Approx(std::sqrt(0.5)));
    CHECK(m.components(0, 1) == doctest::Approx(std::sqrt(0.5)));
    // variance of 0,1,2,3 is 5/3 per axis, 10/3 along the line
    CHECK(m.explained_variance[0] == doctest::Approx(10.0 / 3.0));
    CHECK(m.mean[0] == doctest::Approx(1.5));
    const auto y = pca_transform(m, x);
    CHECK(y(0, 0) == doctest::Approx(-1.5 * std::sqrt(2.0)));
  }

  TEST_CASE("components are eigenvectors of the sample covariance") {
    for (auto [n, d] : {std::pair{40, 6}, std::pair{8, 20}}) {
      const auto x = random_matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d), 3);
      const std::size_t k = 5;
      const auto m = pca_fit(x, k);
      const auto c = covariance(x);
      CHECK(orthonormality_error(m.components) < 1e-10);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i = 0; i < c.rows(); ++i) {
          double cv = 0;
          for (std::size_t j = 0; j < c.cols(); ++j) cv += c(i, j) * m.components(a, j);
          CHECK(cv == doctest::Approx(m.explained_variance[a] * m.components(a, i)).epsilon(1e-8).scale(1.0));
        }
        if (a > 0) CHECK(m.explained_variance[a] <= m.explained_variance[a - 1]);
        // largest-magnitude entry is positive
        double big = 0;
        for (std::size_t j = 0; j < c.cols(); ++j) {
          if (std::abs(m.components(a, j)) > std::abs(big)) big = m.components(a, j);
        }
        CHECK(big > 0);
      }
    }
  }

  TEST_CASE("full-rank round trip") {
    const auto x = random_matrix(30, 8, 9);
    const auto m = pca_fit(x, 8);
    const auto back = pca_reconstruct(m, pca_transform(m, x));
    for (std::size_t i = 0; i < x.data().size(); ++i) CHECK(std::abs(back.data()[i] - x.data()[i]) < 1e-9);
  }

  TEST_CASE("component count policy") {
    CHECK(policy_components(FeatureKind::Handcrafted, 256) == 100);
    CHECK(policy_components(FeatureKind::Handcrafted, 59) == 59);
    CHECK(policy_components(FeatureKind::Handcrafted, 24) == 24);
    CHECK(policy_components(FeatureKind::Deep, 4096) == 1000);
    CHECK(policy_components(FeatureKind::Deep, 1024) == 1000);
  }

  TEST_CASE("too many components is rejected") {
    const auto x = random_matrix(5, 10, 1);
    CHECK_THROWS_AS(pca_fit(x, 5), InputError);
    CHECK_NOTHROW(pca_fit(x, 4));
    const auto m = pca_fit(x, 2);
    CHECK_THROWS_AS(pca_transform(m, random_matrix(3, 9, 1)), InputError);
  }

  TEST_CASE("model file round trip and corruption") {
    const auto x = random_matrix(20, 6, 2);
    const auto m = pca_fit(x, 3);
    const auto dir = fixtures::temp_dir("pca");
    write_pca(m, dir / "m.pca");
    const auto r = read_pca(dir / "m.pca");
    CHECK(r.components == m.components);
    CHECK(r.mean == m.mean);
    CHECK(r.explained_variance == m.explained_variance);

    auto bytes = fixtures::read_file(dir / "m.pca");
    bytes[0] = 'X';
    std::ofstream(dir / "bad.pca", std::ios::binary) << bytes;
    CHECK_THROWS_AS(read_pca(dir / "bad.pca"), FormatError);
    std::ofstream(dir / "short.pca", std::ios::binary) << fixtures::read_file(dir / "m.pca").substr(0, 40);
    CHECK_THROWS_AS(read_pca(dir / "short.pca"), FormatError);
  }
}
