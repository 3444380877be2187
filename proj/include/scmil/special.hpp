#pragma once
#include <cmath>
#include <limits>

#include "scmil/error.hpp"

namespace scmil {

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// max(x,0) + log1p(exp(-|x|)); exact asymptotes at both ends.
inline double softplus_scalar(double x) {
  return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

// Inverse of softplus: y with log(1+exp(y)) = s, s > 0.
inline double softplus_inverse_scalar(double s) {
  if (s <= 0.0) throw DomainError("softplus_inverse: argument must be > 0");
  // s + log(1 - exp(-s)) without cancellation.
  return s + std::log(-std::expm1(-s));
}

namespace detail {

constexpr double kTwoOverSqrtPi = 1.1283791670955125738961589031;
constexpr double kInvSqrtPi = 0.5641895835477562869480794516;

// Maclaurin series, |x| < 0.5.
inline double erf_small(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 32; ++n) {
    term *= -x2 / n;
    const double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-20 * std::fabs(sum)) break;
  }
  return kTwoOverSqrtPi * sum;
}

// Confluent expansion erf(x) = (2x/sqrt(pi)) e^{-x^2} sum_n (2x^2)^n/(2n+1)!!,
// all terms positive, good for 0.5 <= x < 4.
inline double erf_mid(double x) {
  const double twox2 = 2.0 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 200; ++n) {
    term *= twox2 / (2 * n + 1);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return kTwoOverSqrtPi * x * std::exp(-x * x) * sum;
}

// Continued fraction for erfc, x >= 4 (modified Lentz).
inline double erfc_large(double x) {
  if (x >= 27.0) return 0.0;  // e^{-x^2} underflows
  const double tiny = 1e-300;
  double f = tiny;
  double c = f;
  double d = 0.0;
  // CF = 1/(x + 1/(2x + 2/(x + 3/(2x + 4/(x + ...)))))
  for (int k = 1; k <= 120; ++k) {
    const double a = (k == 1) ? 1.0 : static_cast<double>(k - 1);
    const double b = (k % 2 == 1) ? x : 2.0 * x;
    d = b + a * d;
    if (d == 0.0) d = tiny;
    c = b + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x * x) * kInvSqrtPi * f;
}

}  // namespace detail

// Gaussian error function, odd by construction, |error| well below 1e-12.
inline double erf_scalar(double x) {
  const double ax = std::fabs(x);
  double r;
  if (ax < 0.5)
    r = detail::erf_small(ax);
  else if (ax < 4.0)
    r = detail::erf_mid(ax);
  else
    r = 1.0 - detail::erfc_large(ax);
  return x < 0.0 ? -r : r;
}

inline double erfc_scalar(double x) {
  if (x < 0.0) return 2.0 - erfc_scalar(-x);
  if (x >= 2.5) return detail::erfc_large(x);  // fully relative-accurate tail
  return 1.0 - erf_scalar(x);
}

constexpr double kSqrt2 = 1.4142135623730950488016887242;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599;
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364;

inline double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
inline double log_norm_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }
inline double norm_cdf(double z) { return 0.5 * erfc_scalar(-z / kSqrt2); }
inline double norm_sf(double z) { return 0.5 * erfc_scalar(z / kSqrt2); }

// Inverse standard normal CDF: Acklam's rational approximation polished
// with two Newton steps against norm_cdf.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("norm_quantile: p must lie in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const double err = norm_cdf(x) - p;
    x -= err / norm_pdf(x);
  }
  return x;
}

}  // namespace scmil
