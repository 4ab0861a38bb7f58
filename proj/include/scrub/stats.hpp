#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "scrub/types.hpp"

namespace scrub {

/// Type-7 quantile (linear interpolation between order statistics),
/// matching R's default. p in [0, 1].
inline double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw ScrubError("quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double quantile(const Vector& x, double p) {
  return quantile(std::vector<double>(x.data(), x.data() + x.size()), p);
}

inline double median(const Vector& x) { return quantile(x, 0.5); }
inline double median(const std::vector<double>& x) { return quantile(x, 0.5); }

/// Median absolute deviation about the median, unscaled.
inline double mad(const Vector& x) {
  const double m = median(x);
  Vector dev = (x.array() - m).abs();
  return median(dev);
}

/// Normal-consistency constant for MAD: 1/Phi^-1(0.75).
inline constexpr double kMadToSd = 1.4826022185056018;

/// Half-IQR estimate of standard deviation: (median - Q25) / 0.6745.
inline double s_hiqr(const Vector& d) {
  if (d.size() < 4) throw ScrubError("s_hiqr: need at least 4 values");
  const double m = quantile(d, 0.5);
  const double q25 = quantile(d, 0.25);
  const double half_iqr = m - q25;
  if (half_iqr <= 0) throw ScrubError("DVARS variance undefined");
  return half_iqr / 0.6745;
}

/// Excess kurtosis with the population-style estimator:
/// (1/N) sum(((x_i - mean)/s)^4) - 3, with s the N-1 sample SD.
inline double kurtosis(const Vector& x) {
  const auto n = x.size();
  if (n < 4) throw ScrubError("kurtosis: need at least 4 values");
  const double mean = x.mean();
  const Vector c = x.array() - mean;
  const double ss = c.squaredNorm();
  if (ss < 1e-300) throw ScrubError("kurtosis: zero variance");
  const double s2 = ss / static_cast<double>(n - 1);
  const double m4 = c.array().pow(4).sum() / static_cast<double>(n);
  return m4 / (s2 * s2) - 3.0;
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double normal_cdf(double z) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

/// Upper-tail probability of a chi-squared variable with (possibly
/// fractional) dof.
inline double chi2_sf(double q, double dof) {
  if (q <= 0) return 1.0;
  return boost::math::cdf(boost::math::complement(
      boost::math::chi_squared_distribution<double>(dof), q));
}

}  // namespace scrub
