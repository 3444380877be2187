#include <catch2/catch.hpp>

#include <cmath>

#include "helpers.hpp"
#include "scmil/special.hpp"
#include "scmil/tape.hpp"

using namespace scmil;

namespace {

// Independent high-precision oracle: Maclaurin series in long double.
long double erf_series_oracle(long double x) {
  const long double two_over_sqrt_pi = 1.12837916709551257389615890312L;
  long double term = x, sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    sum += term / (2 * n + 1);
    if (std::fabs(static_cast<double>(term)) < 1e-25) break;
  }
  return two_over_sqrt_pi * sum;
}

}  // namespace

TEST_CASE("matmul basics", "[numerics]") {
  Rng rng(7);
  const Matrix m = scmil_test::random_matrix(3, 3, rng);
  const Matrix im = matmul(Matrix::identity(3), m);
  REQUIRE(im == m);

  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{1}, {1}});
  const Matrix c = matmul(a, b);
  REQUIRE(c.at(0, 0) == 3.0);
  REQUIRE(c.at(1, 0) == 7.0);

  REQUIRE_THROWS_MATCHES(matmul(Matrix(2, 3), Matrix(4, 1)), ShapeError,
                         Catch::Matchers::Message(
                             "matmul: inner dimensions differ, a is 2x3, b is 4x1"));
}

TEST_CASE("softmax rows", "[numerics]") {
  Tape t;
  const int z = t.softmax_rows(t.constant(Matrix::row({0.0, 0.0})));
  REQUIRE(t.value(z).at(0, 0) == Approx(0.5).margin(1e-12));
  REQUIRE(t.value(z).at(0, 1) == Approx(0.5).margin(1e-12));

  const int a = t.softmax_rows(t.constant(Matrix::row({0.0, std::log(3.0)})));
  REQUIRE(t.value(a).at(0, 0) == Approx(0.25).margin(1e-12));
  REQUIRE(t.value(a).at(0, 1) == Approx(0.75).margin(1e-12));

  const int big = t.softmax_rows(t.constant(Matrix::row({1000.0, 1000.0})));
  REQUIRE(t.value(big).at(0, 0) == Approx(0.5).margin(1e-12));
  REQUIRE(t.value(big).all_finite());

  // rows sum to 1 and shifting a row by a constant changes nothing
  Rng rng(3);
  const Matrix x = scmil_test::random_matrix(5, 7, rng, 3.0);
  Matrix shifted = x;
  for (int i = 0; i < shifted.rows(); ++i)
    for (int j = 0; j < shifted.cols(); ++j) shifted.at(i, j) += 17.25;
  Tape t2;
  const Matrix y = t2.value(t2.softmax_rows(t2.constant(x)));
  const Matrix ys = t2.value(t2.softmax_rows(t2.constant(shifted)));
  for (int i = 0; i < y.rows(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < y.cols(); ++j) {
      sum += y.at(i, j);
      REQUIRE(y.at(i, j) >= 0.0);
      REQUIRE(y.at(i, j) == Approx(ys.at(i, j)).margin(1e-9));
    }
    REQUIRE(sum == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("elementwise activations", "[numerics]") {
  REQUIRE(sigmoid_scalar(0.0) == 0.5);
  REQUIRE(softplus_scalar(0.0) == Approx(std::log(2.0)).margin(1e-15));
  REQUIRE(softplus_scalar(50.0) == Approx(50.0).margin(1e-12));
  REQUIRE(softplus_scalar(-745.0) >= 0.0);
  REQUIRE(std::isfinite(softplus_scalar(-745.0)));
  REQUIRE(softplus_scalar(softplus_inverse_scalar(0.999)) == Approx(0.999).margin(1e-12));

  Tape t;
  const int s = t.sigmoid(t.constant(Matrix::row({0.0})));
  REQUIRE(t.value(s).at(0, 0) == 0.5);
  const int sp = t.softplus(t.constant(Matrix::row({0.0, 50.0})));
  REQUIRE(t.value(sp).at(0, 0) == Approx(0.6931471805599453).margin(1e-12));
  REQUIRE(t.value(sp).at(0, 1) == Approx(50.0).margin(1e-12));
}

TEST_CASE("erf accuracy and symmetry", "[numerics]") {
  REQUIRE(erf_scalar(0.0) == 0.0);
  REQUIRE(erf_scalar(6.0) > 1.0 - 1e-15);
  // frozen value cross-checked against the series oracle below
  REQUIRE(erf_scalar(1.0) == Approx(0.842700792949715).margin(1e-12));

  for (double x = 0.01; x < 3.0; x += 0.137) {
    const double oracle = static_cast<double>(erf_series_oracle(x));
    REQUIRE(std::fabs(erf_scalar(x) - oracle) < 1e-12);
    REQUIRE(erf_scalar(-x) == -erf_scalar(x));  // odd, exactly
  }
  // independent library implementation as a second oracle over a wide range
  for (double x = 0.05; x < 9.0; x += 0.31) {
    REQUIRE(std::fabs(erf_scalar(x) - std::erf(x)) < 1e-13);
    REQUIRE(std::fabs(erfc_scalar(x) - std::erfc(x)) <=
            1e-12 * std::fmax(std::erfc(x), 1e-300));
  }
  REQUIRE(erfc_scalar(-3.0) == Approx(2.0 - erfc_scalar(3.0)).margin(1e-15));
  REQUIRE(norm_cdf(0.0) == Approx(0.5).margin(1e-15));
  REQUIRE(norm_sf(8.0) == Approx(std::erfc(8.0 / kSqrt2) / 2).epsilon(1e-10));
}

TEST_CASE("norm_quantile inverts norm_cdf", "[numerics]") {
  for (double p = 0.002; p < 0.999; p += 0.0373) {
    const double z = norm_quantile(p);
    REQUIRE(norm_cdf(z) == Approx(p).margin(1e-12));
  }
  REQUIRE_THROWS_AS(norm_quantile(0.0), DomainError);
  REQUIRE_THROWS_AS(norm_quantile(1.0), DomainError);
}

TEST_CASE("dropout behavior", "[numerics]") {
  Rng rng(11);
  Tape t;
  const Matrix x(40, 5, 1.0);
  const int a = t.constant(x);
  REQUIRE(t.dropout(a, 0.0, true, rng) == a);   // rate 0: identity node
  REQUIRE(t.dropout(a, 0.5, false, rng) == a);  // inference: identity node
  REQUIRE_THROWS_AS(t.dropout(a, 1.0, true, rng), ConfigError);
  REQUIRE_THROWS_AS(t.dropout(a, -0.1, true, rng), ConfigError);

  // Monte Carlo: inverted dropout preserves the mean
  const int big = t.constant(Matrix(1000, 100, 1.0));
  const int dropped = t.dropout(big, 0.1, true, rng);
  double mean = 0.0;
  const Matrix& y = t.value(dropped);
  for (size_t i = 0; i < y.size(); ++i) mean += y.data()[i];
  mean /= static_cast<double>(y.size());
  REQUIRE(mean == Approx(1.0).margin(0.01));
  // surviving entries are scaled by 1/(1-rate)
  for (size_t i = 0; i < y.size(); ++i)
    REQUIRE((y.data()[i] == 0.0 || y.data()[i] == Approx(1.0 / 0.9)));
}
