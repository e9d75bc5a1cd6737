#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "nucleifuse/error.hpp"
#include "nucleifuse/metrics.hpp"
#include "nucleifuse/rng.hpp"
#include "oracles.hpp"

using namespace nucleifuse;
using namespace nucleifuse::metrics;

namespace {

Matrix one_hot(const Labels& y) {
  Matrix m(y.size(), 4);
  for (std::size_t i = 0; i < y.size(); ++i) m(i, static_cast<std::size_t>(y[i])) = 1.0;
  return m;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("confusion counts") {
    Rng rng(1);
    Labels t, p;
    for (int i = 0; i < 200; ++i) {
      t.push_back(static_cast<int>(rng.below(4)));
      p.push_back(static_cast<int>(rng.below(4)));
    }
    const auto c = confusion(t, p);
    std::size_t total = 0;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < t.size(); ++i) n += t[i] == a && p[i] == b;
        CHECK(c[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] == n);
        total += n;
      }
    }
    CHECK(total == 200);
    const auto empty = confusion({}, {});
    for (const auto& row : empty) {
      for (auto v : row) CHECK(v == 0);
    }
  }

  TEST_CASE("macro scores from a hand confusion matrix") {
    // [[3,1],[2,4]] in the top-left corner
    const Labels t = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    const Labels p = {0, 0, 0, 1, 0, 0, 1, 1, 1, 1};
    const auto s = macro_prf(t, p);
    const double precision = (3.0 / 5.0 + 4.0 / 5.0) / 2.0;
    const double recall = (3.0 / 4.0 + 4.0 / 6.0) / 2.0;
    CHECK(s.precision == doctest::Approx(precision).epsilon(1e-15));
    CHECK(s.recall == doctest::Approx(recall).epsilon(1e-15));
    CHECK(s.f1 == doctest::Approx(2 * precision * recall / (precision + recall)).epsilon(1e-15));
    CHECK(s.excluded == std::array<bool, 4>{false, false, true, true});
    CHECK(s.warning());
  }

  TEST_CASE("perfect and all-wrong predictions") {
    const Labels y = {0, 1, 2, 3, 1};
    const auto perfect = macro_prf(y, y);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    const auto wrong = macro_prf(Labels{0, 1}, Labels{1, 0});
    CHECK(wrong.precision == 0.0);
    CHECK(wrong.recall == 0.0);
    CHECK(wrong.f1 == 0.0);
    CHECK_THROWS_AS(macro_prf(Labels{}, Labels{}), InputError);
    CHECK_THROWS_AS(macro_prf(Labels{0}, Labels{0, 1}), InputError);
  }

  TEST_CASE("cross-entropy") {
    const Labels y = {0, 2, 3};
    CHECK(cross_entropy(y, one_hot(y)) == 0.0);
    CHECK(cross_entropy(y, Matrix(3, 4, 0.25)) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    Matrix p(3, 4, 0.0);
    p(0, 0) = 0.5;
    p(1, 2) = 0.8;
    p(2, 3) = 0.1;
    const double expect = -(std::log(0.5) + std::log(0.8) + std::log(0.1)) / 3.0;
    CHECK(cross_entropy(y, p) == doctest::Approx(expect).epsilon(1e-15));
    p(2, 3) = 0.0;  // clamped
    CHECK(cross_entropy(y, p) == doctest::Approx(-(std::log(0.5) + std::log(0.8) + std::log(1e-7)) / 3.0));
    p(1, 1) = std::nan("");
    CHECK_THROWS_AS(cross_entropy(y, p), InputError);
  }

  TEST_CASE("AUC against pair counting, including ties") {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      const std::size_t n = 6 + rng.below(10);
      std::vector<double> s(n);
      std::vector<bool> pos(n);
      std::vector<std::uint8_t> flags(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = static_cast<double>(rng.below(4));
        pos[i] = i < 2 || (i >= 4 && rng.below(2));
        if (i == 2 || i == 3) pos[i] = false;
        flags[i] = pos[i];
      }
      CHECK(binary_auc(s, flags) == doctest::Approx(oracle::pair_auc(s, pos)).epsilon(1e-12));
      // strictly monotone transform
      std::vector<double> cubed(s);
      for (auto& v : cubed) v = v * v * v;
      CHECK(binary_auc(cubed, flags) == binary_auc(s, flags));
    }
  }

  TEST_CASE("AUC of random scores is near one half") {
    Rng rng(3);
    std::vector<double> s(2000);
    std::vector<std::uint8_t> pos(2000);
    for (std::size_t i = 0; i < 2000; ++i) {
      s[i] = rng.uniform();
      pos[i] = i % 2;
    }
    CHECK(std::abs(binary_auc(s, pos) - 0.5) < 0.03);
  }

  TEST_CASE("multiclass AUC") {
    const Labels y = {0, 1, 2, 3, 0, 1, 2, 3};
    CHECK(multiclass_auc(y, one_hot(y)).auc == 1.0);
    const Labels only01 = {0, 1, 0, 1};
    const auto partial = multiclass_auc(only01, Matrix(4, 4, 0.25));
    CHECK(partial.excluded == std::array<bool, 4>{false, false, true, true});
    CHECK(partial.auc == 0.5);
  }

  TEST_CASE("report serialisation") {
    const Labels y = {0, 1, 2, 3, 0, 1, 2, 3};
    auto r = evaluate("toy", y, Matrix(8, 4, 0.25));
    r.feature_width = 12;
    r.validate();
    const auto j = nlohmann::json::parse(report_json(r));
    CHECK(j["name"] == "toy");
    CHECK(j["loss"].get<double>() == doctest::Approx(std::log(4.0)));
    const std::array<EvaluationReport, 1> rs = {r};
    const auto csv = reports_csv(rs);
    CHECK(csv.starts_with("method,precision,recall,f1,auc,loss,features,samples\ntoy,"));
    CHECK(csv.find(",12,8\n") != std::string::npos);

    auto bad = r;
    bad.f1 = 1.5;
    CHECK_THROWS_AS(bad.validate(), InputError);
  }
}
