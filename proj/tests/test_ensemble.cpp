#include <doctest.h>

#include <cmath>

#include "nucleifuse/ensemble.hpp"
#include "nucleifuse/error.hpp"
#include "nucleifuse/rng.hpp"

using namespace nucleifuse;
using namespace nucleifuse::ensemble;
using reduction::FeatureKind;

namespace {

ProbabilityMatrix constant(std::size_t n, double p, std::string id) {
  return {Matrix(n, 4, p), std::move(id)};
}

Labels cyclic(std::size_t n) {
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 4);
  return y;
}

// Softmax of a noisy one-hot score.
ProbabilityMatrix noisy_member(const Labels& y, double noise, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(y.size(), 4);
  for (std::size_t i = 0; i < y.size(); ++i) {
    double z = 0;
    std::array<double, 4> e{};
    for (std::size_t c = 0; c < 4; ++c) {
      e[c] = std::exp((static_cast<int>(c) == y[i] ? 1.0 : 0.0) + noise * rng.normal());
      z += e[c];
    }
    for (std::size_t c = 0; c < 4; ++c) m(i, c) = e[c] / z;
  }
  return {m, "m" + std::to_string(seed)};
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("pooling worked example and symmetry point") {
    const std::array<double, 2> half = {0.5, 0.5};
    const std::array<double, 2> p = {0.8, 0.5};
    CHECK(std::abs(pool_scalar(p, half) - 2.0 / 3.0) < 1e-12);
    const std::array<double, 2> q = {0.5, 0.5};
    CHECK(std::abs(pool_scalar(q, half) - 0.5) < 1e-12);
  }

  TEST_CASE("pooling algebra") {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
      const double a = rng.uniform(0.01, 0.99), b = rng.uniform(0.01, 0.99), c = rng.uniform(0.01, 0.99);
      const std::array<double, 3> w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
      const std::array<double, 3> same = {a, a, a};
      CHECK(std::abs(pool_scalar(same, w) - a) < 1e-12);
      const std::array<double, 3> abc = {a, b, c}, cab = {c, a, b};
      CHECK(std::abs(pool_scalar(abc, w) - pool_scalar(cab, w)) < 1e-12);
      const std::array<double, 3> comp = {1 - a, 1 - b, 1 - c};
      CHECK(std::abs(pool_scalar(comp, w) - (1 - pool_scalar(abc, w))) < 1e-12);
      const std::array<double, 3> bigger = {std::min(a + 0.005, 0.999), b, c};
      CHECK(pool_scalar(bigger, w) > pool_scalar(abc, w));
      const std::array<double, 1> one = {a}, w1 = {1.0};
      CHECK(std::abs(pool_scalar(one, w1) - a) < 1e-12);
    }
  }

  TEST_CASE("clamping keeps pooled values inside (0, 1)") {
    const std::array<double, 2> half = {0.5, 0.5};
    const std::array<double, 2> extreme = {0.0, 1.0};
    const double v = pool_scalar(extreme, half);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(v == doctest::Approx(0.5));
    const std::array<double, 2> zeros = {0.0, 0.0};
    CHECK(pool_scalar(zeros, half) == doctest::Approx(1e-7).epsilon(1e-6));
  }

  TEST_CASE("matrix pooling is per entry and not renormalised") {
    std::vector<ProbabilityMatrix> members = {constant(3, 0.8, "a"), constant(3, 0.5, "b")};
    const auto out = pool_probabilities(members);
    for (double v : out.data()) CHECK(std::abs(v - 2.0 / 3.0) < 1e-12);
  }

  TEST_CASE("pooling rejects bad members") {
    std::vector<ProbabilityMatrix> members = {constant(3, 0.5, "a"), constant(4, 0.5, "b")};
    CHECK_THROWS_WITH_AS(pool_probabilities(members), doctest::Contains("b"), InputError);
    members[1] = constant(3, 0.5, "b");
    members[1].values(2, 1) = std::nan("");
    CHECK_THROWS_WITH_AS(pool_probabilities(members), doctest::Contains("(2, 1)"), InputError);
    members[1] = constant(3, 0.5, "b");
    const std::array<double, 2> neg = {1.5, -0.5};
    CHECK_THROWS_AS(pool_probabilities(members, neg), InputError);
  }

  TEST_CASE("ensemble spec validation") {
    auto spec = EnsembleSpec::uniform({"lbp", "hog", "rshd"}, Stage::HCF);
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.weights[0] == doctest::Approx(1.0 / 3));
    CHECK_THROWS_AS(EnsembleSpec::uniform({"lbp"}, Stage::HCF).validate(), InputError);
    spec.weights = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(spec.validate(), InputError);
  }

  TEST_CASE("pooling independent noisy members beats each member") {
    const auto y = cyclic(2000);
    const auto a = noisy_member(y, 0.9, 1), b = noisy_member(y, 0.9, 2);
    const std::vector<ProbabilityMatrix> members = {a, b};
    const double fa = metrics::macro_prf(y, metrics::argmax(a.values)).f1;
    const double fb = metrics::macro_prf(y, metrics::argmax(b.values)).f1;
    const double pooled = metrics::macro_prf(y, metrics::argmax(pool_probabilities(members))).f1;
    CHECK(pooled >= fa);
    CHECK(pooled >= fb);
  }

  TEST_CASE("cascade with perfect members scores 1 at every stage") {
    const auto y = cyclic(1200);
    Matrix hot(y.size(), 4);
    for (std::size_t i = 0; i < y.size(); ++i) hot(i, static_cast<std::size_t>(y[i])) = 1.0;
    const std::vector<ProbabilityMatrix> hcf = {{hot, "a"}, {hot, "b"}, {hot, "c"}};
    const std::vector<ProbabilityMatrix> deep = {{hot, "d"}, {hot, "e"}};
    CascadeConfig cfg;
    const auto res = cascade_run(hcf, deep, y, cfg);
    const auto reports = res.reports();
    CHECK(reports[0].name == "HF-Ensemble");
    CHECK(reports[1].name == "Deep Ensemble");
    CHECK(reports[2].name == "HF + Deep Ensemble");
    for (const auto& r : reports) CHECK(r.f1 == 1.0);

    const std::vector<ProbabilityMatrix> lonely = {{hot, "d"}};
    CHECK_THROWS_AS(cascade_run(hcf, lonely, y, cfg), InputError);
  }

  TEST_CASE("feature concatenation") {
    FeatureMatrix a(Matrix(3, 2, 1.0), "lbp"), b(Matrix(3, 5, 2.0), "resnet50");
    const std::vector<FeatureMatrix> both = {a, b};
    const auto c = concat_features(both);
    CHECK(c.cols() == 7);
    CHECK(c.values(1, 1) == 1.0);
    CHECK(c.values(1, 2) == 2.0);
    CHECK(c.source_id() == "lbp+resnet50");
    REQUIRE(c.blocks.size() == 2);
    CHECK(c.blocks[1].width == 5);
    const std::vector<FeatureMatrix> single = {a};
    CHECK(concat_features(single).values == a.values);
    const std::vector<FeatureMatrix> ragged = {a, FeatureMatrix(Matrix(4, 1), "x")};
    CHECK_THROWS_AS(concat_features(ragged), InputError);
  }

  TEST_CASE("concatenated widths under the reduction policy") {
    using Dim = std::pair<std::size_t, FeatureKind>;
    const std::vector<Dim> hcf = {{256, FeatureKind::Handcrafted}, {59, FeatureKind::Handcrafted},
                                  {100, FeatureKind::Handcrafted}, {1216, FeatureKind::Handcrafted},
                                  {24, FeatureKind::Handcrafted},  {256, FeatureKind::Handcrafted},
                                  {256, FeatureKind::Handcrafted}, {320, FeatureKind::Handcrafted},
                                  {256, FeatureKind::Handcrafted}};
    const std::vector<Dim> deep = {{4096, FeatureKind::Deep}, {4096, FeatureKind::Deep}, {4096, FeatureKind::Deep},
                                   {2048, FeatureKind::Deep}, {1024, FeatureKind::Deep}, {2048, FeatureKind::Deep}};
    std::vector<Dim> all = hcf;
    all.insert(all.end(), deep.begin(), deep.end());
    std::vector<Dim> hcf_resnet = hcf;
    hcf_resnet.push_back({2048, FeatureKind::Deep});
    CHECK(concat_width(hcf, true) == 783);
    CHECK(concat_width(deep, true) == 6000);
    CHECK(concat_width(all, true) == 6783);
    CHECK(concat_width(hcf_resnet, true) == 1783);
    CHECK(concat_width(hcf, false) == 2743);
    CHECK(concat_width(deep, false) == 17408);
    CHECK(concat_width(all, false) == 20151);
    CHECK(concat_width(hcf_resnet, false) == 4791);
  }

  TEST_CASE("single-member concatenation equals a plain run") {
    const auto y = cyclic(40);
    Rng rng(3);
    Matrix x(40, 3);
    for (std::size_t i = 0; i < 40; ++i) {
      for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal() + (static_cast<int>(j) == y[i] % 3 ? 2.0 : 0.0);
    }
    const FeatureMatrix f(x, "lbp");
    const auto folds = dataset::make_folds(y, 2, 1);
    classify::TrainConfig cfg;
    cfg.max_epochs = 20;
    const std::vector<ConcatMember> one = {{&f, FeatureKind::Handcrafted}};
    const auto a = concat_run(one, false, y, folds, cfg, "lbp");
    const auto b = crossval::cross_validate(f, y, folds, cfg, "lbp").report;
    CHECK(a.f1 == b.f1);
    CHECK(a.loss == b.loss);
    CHECK(a.feature_width == 3);
  }

  TEST_CASE("probability histograms") {
    const auto y = cyclic(40);
    Matrix hot(40, 4);
    for (std::size_t i = 0; i < 40; ++i) hot(i, static_cast<std::size_t>(y[i])) = 1.0;
    const auto h1 = probability_histograms(hot, y, 10);
    for (std::size_t c = 0; c < 4; ++c) CHECK(h1.counts(c, 9) == 10.0);

    const auto h2 = probability_histograms(Matrix(40, 4, 0.25), y, 10);
    for (std::size_t c = 0; c < 4; ++c) CHECK(h2.counts(c, 2) == 10.0);

    Rng rng(5);
    Matrix p(40, 4);
    for (double& v : p.data()) v = rng.uniform();
    const auto h3 = probability_histograms(p, y, 7);
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t b = 0; b < 7; ++b) {
        double n = 0;
        for (std::size_t i = 0; i < 40; ++i) {
          if (static_cast<std::size_t>(y[i]) != c) continue;
          const double v = p(i, c);
          n += v >= b / 7.0 && (v < (b + 1) / 7.0 || (b == 6 && v <= 1.0));
        }
        CHECK(h3.counts(c, b) == n);
      }
    }
    CHECK(h3.to_csv().starts_with("class,bin_lo,bin_hi,count\n"));
    CHECK_THROWS_AS(probability_histograms(p, y, 1), InputError);
  }
}
