#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "annoteval/error.hpp"

// 95% BCa bootstrap confidence intervals for the mean of per-document scores.
//
// The resample stream is part of the contract so results are reproducible:
// a std::mt19937_64 seeded with `seed` supplies draws; resample b (b = 0..B-1)
// takes n indices in order as gen() % n. Identical (values, B, seed, level)
// give a bit-identical interval on any platform.

namespace annoteval {

/// Inverse standard normal CDF, Wichura's algorithm AS 241 (PPND16).
/// Relative error below 1e-15 over (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCode::DomainError, "normal_quantile requires 0 < p < 1");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  enum class Method { bca, percentile_fallback } method = Method::bca;
  int n_resamples = 0;
  std::uint64_t seed = 0;
  std::string warning;  // empty when the plain BCa path applied

  double half_width() const { return (upper - lower) / 2.0; }
  const char* method_name() const {
    return method == Method::bca ? "bca" : "percentile_fallback";
  }
};

namespace detail {

/// Empirical quantile with linear interpolation between order statistics
/// (h = (B-1)*alpha).
inline double quantile_sorted(const std::vector<double>& sorted, double alpha) {
  const std::size_t n = sorted.size();
  if (alpha <= 0.0) return sorted.front();
  if (alpha >= 1.0) return sorted.back();
  const double h = static_cast<double>(n - 1) * alpha;
  const double fl = std::floor(h);
  const auto lo = static_cast<std::size_t>(fl);
  if (lo + 1 >= n) return sorted.back();
  return sorted[lo] + (h - fl) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// BCa interval for the arithmetic mean of `values`. Falls back to plain
/// percentile bounds (with a warning) when the bias term is infinite or the
/// jackknife variance vanishes.
inline ConfidenceInterval bca_interval(const std::vector<double>& values, int B,
                                       std::uint64_t seed, double level = 0.95) {
  const std::size_t n = values.size();
  if (n < 2)
    throw Error(ErrorCode::InsufficientData, "need at least 2 values for a bootstrap interval");
  if (B < 1000)
    throw Error(ErrorCode::DomainError, "resample count must be at least 1000");
  if (!(level > 0.0 && level < 1.0))
    throw Error(ErrorCode::DomainError, "confidence level must be in (0, 1)");

  double total = 0.0;
  for (double v : values) total += v;
  const double theta_hat = total / static_cast<double>(n);

  std::mt19937_64 gen(seed);
  std::vector<double> boot(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sum += values[static_cast<std::size_t>(gen() % n)];
    boot[static_cast<std::size_t>(b)] = sum / static_cast<double>(n);
  }

  ConfidenceInterval ci;
  ci.level = level;
  ci.n_resamples = B;
  ci.seed = seed;

  // Bias correction; resamples equal to the estimate count half.
  std::int64_t n_less = 0, n_eq = 0;
  for (double t : boot) {
    if (t < theta_hat)
      ++n_less;
    else if (t == theta_hat)
      ++n_eq;
  }
  const double p0 =
      (static_cast<double>(n_less) + 0.5 * static_cast<double>(n_eq)) / static_cast<double>(B);

  // Jackknife acceleration.
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i)
    loo[i] = (total - values[i]) / static_cast<double>(n - 1);
  double loo_total = 0.0;
  for (double v : loo) loo_total += v;
  const double loo_mean = loo_total / static_cast<double>(n);
  double sum2 = 0.0, sum3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = loo_mean - loo[i];
    sum2 += d * d;
    sum3 += d * d * d;
  }

  std::string fallback_reason;
  if (p0 <= 0.0 || p0 >= 1.0)
    fallback_reason = "all bootstrap resamples on one side of the estimate";
  else if (sum2 == 0.0)
    fallback_reason = "zero jackknife variance";

  std::sort(boot.begin(), boot.end());
  const double alpha = 1.0 - level;

  if (fallback_reason.empty()) {
    const double z0 = normal_quantile(p0);
    const double accel = sum3 / (6.0 * std::pow(sum2, 1.5));
    const double z_lo = normal_quantile(alpha / 2.0);
    const double z_hi = normal_quantile(1.0 - alpha / 2.0);
    const double den_lo = 1.0 - accel * (z0 + z_lo);
    const double den_hi = 1.0 - accel * (z0 + z_hi);
    if (den_lo <= 0.0 || den_hi <= 0.0) {
      fallback_reason = "acceleration pushes adjusted quantile out of range";
    } else {
      const double a1 = normal_cdf(z0 + (z0 + z_lo) / den_lo);
      const double a2 = normal_cdf(z0 + (z0 + z_hi) / den_hi);
      ci.lower = detail::quantile_sorted(boot, a1);
      ci.upper = detail::quantile_sorted(boot, a2);
      ci.method = ConfidenceInterval::Method::bca;
    }
  }
  if (!fallback_reason.empty()) {
    ci.lower = detail::quantile_sorted(boot, alpha / 2.0);
    ci.upper = detail::quantile_sorted(boot, 1.0 - alpha / 2.0);
    ci.method = ConfidenceInterval::Method::percentile_fallback;
    ci.warning = fallback_reason;
  }
  if (theta_hat < ci.lower || theta_hat > ci.upper) {
    if (!ci.warning.empty()) ci.warning += "; ";
    ci.warning += "estimate outside interval";
  }
  return ci;
}

}  // namespace annoteval
