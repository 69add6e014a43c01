#include <cmath>
#include <set>

#include "clusca/error.hpp"
#include "clusca/feature_map.hpp"
#include "clusca/numeric.hpp"
#include "clusca/rng.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace clusca;

TEST_CASE("feature map construction and arithmetic") {
  FeatureMap m(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 1.5);
  CHECK_THROWS_AS(FeatureMap(2, 2, std::vector<double>{1, 2, 3}), ShapeError);

  const auto a = FeatureMap::from_rows({{1, 2}, {3, 4}});
  const auto b = FeatureMap::from_rows({{10, 20}, {30, 40}});
  CHECK(a + b == FeatureMap::from_rows({{11, 22}, {33, 44}}));
  CHECK(b - a == FeatureMap::from_rows({{9, 18}, {27, 36}}));
  CHECK(2.0 * a == FeatureMap::from_rows({{2, 4}, {6, 8}}));
  FeatureMap c = a;
  CHECK_THROWS_AS(c += FeatureMap(3, 2), ShapeError);
  CHECK(a.all_finite());
  c(0, 0) = std::nan("");
  CHECK_FALSE(c.all_finite());
}

TEST_CASE("rng streams are deterministic and distinct") {
  SeededRng a(7, RngStream::noise);
  SeededRng b(7, RngStream::noise);
  SeededRng c(7, RngStream::weights);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);

  SeededRng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.uniform_index(5) < 5);
  }
  CHECK(u.uniform_index(1) == 0);
}

TEST_CASE("matmul examples") {
  const auto m = FeatureMap::from_rows({{2, -1}, {0.5, 7}});
  CHECK(matmul(FeatureMap::identity(2), m) == m);
  CHECK(matmul(FeatureMap::from_rows({{1, 2}, {3, 4}}), FeatureMap::from_rows({{5}, {6}})) ==
        FeatureMap::from_rows({{17}, {39}}));
  CHECK(matmul(FeatureMap(2, 2), m) == FeatureMap(2, 2));
  CHECK_THROWS_AS(matmul(FeatureMap(2, 3), FeatureMap(2, 3)), ShapeError);
}

TEST_CASE("matmul agrees with the reference and is associative") {
  SeededRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = seeded_gaussian(4, 5, rng);
    const auto b = seeded_gaussian(5, 3, rng);
    const auto c = seeded_gaussian(3, 6, rng);
    const auto ref = oracle::multiply(oracle::to_matrix(a), oracle::to_matrix(b));
    const auto ab = matmul(a, b);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(ab(i, j) == doctest::Approx(ref[i][j]).epsilon(1e-14));
    const auto left = matmul(ab, c);
    const auto right = matmul(a, matmul(b, c));
    CHECK(frobenius_norm(left - right) / frobenius_norm(left) <= 1e-9);
    CHECK(matmul_transposed(a, transpose(b)) == ab);
  }
}

TEST_CASE("softmax examples and row sums") {
  const auto s = softmax_rows(FeatureMap::from_rows({{0, 0}, {std::log(1.0), std::log(3.0)}}));
  CHECK(s(0, 0) == 0.5);
  CHECK(s(0, 1) == 0.5);
  CHECK(s(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s(1, 1) == doctest::Approx(0.75).epsilon(1e-15));
  for (double c : {-1e3, 0.0, 42.0, 1e300}) {
    const auto r = softmax_rows(FeatureMap::from_rows({{c, c, c}}));
    for (std::size_t j = 0; j < 3; ++j) CHECK(r(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SeededRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = seeded_gaussian(3, 17, rng);
    m *= 50.0;
    const auto p = softmax_rows(m);
    for (std::size_t r = 0; r < 3; ++r) {
      double sum = 0.0;
      for (double v : p.row(r)) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("layer norm examples") {
  const std::vector<double> one(2, 1.0), zero(2, 0.0), bias{0.25, -3.0};
  CHECK(layer_norm(FeatureMap::from_rows({{4, 4}}), one, zero, 1e-6) == FeatureMap(1, 2, 0.0));
  const auto r = layer_norm(FeatureMap::from_rows({{1, 3}}), one, zero, 1e-15);
  CHECK(r(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(layer_norm(FeatureMap::from_rows({{9, 9}}), one, bias, 1e-6) ==
        FeatureMap::from_rows({{0.25, -3.0}}));
  CHECK_THROWS_AS(layer_norm(FeatureMap(1, 3), one, zero, 1e-6), ShapeError);
}

TEST_CASE("seeded gaussian") {
  SeededRng a(1), b(1), c(2);
  const auto x = seeded_gaussian(4, 4, a);
  CHECK(x == seeded_gaussian(4, 4, b));
  CHECK(x != seeded_gaussian(4, 4, c));

  SeededRng big(99);
  const auto s = seeded_gaussian(1000, 100, big);
  double mean = 0.0;
  for (double v : s.values()) mean += v;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(s.size());
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("gelu matches the tanh form") {
  auto m = FeatureMap::from_rows({{-3, -0.5, 0, 0.5, 3}});
  const auto before = m;
  gelu_inplace(m);
  for (std::size_t j = 0; j < 5; ++j) CHECK(m(0, j) == doctest::Approx(oracle::gelu(before(0, j))).epsilon(1e-15));
}
