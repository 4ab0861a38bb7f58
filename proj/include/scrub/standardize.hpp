#pragma once

#include <cmath>

#include "scrub/stats.hpp"
#include "scrub/types.hpp"

namespace scrub {

/// Robustly center (median) and scale (MAD x 1.4826) every column.
/// Columns whose robust scale falls below 1e-12 are dropped and recorded.
inline StandardizedScan robust_standardize(const ScanMatrix& scan) {
  scan.validate();
  const auto T = scan.T();
  const auto V = scan.V();

  std::vector<Eigen::Index> keep, dropped;
  std::vector<double> centers, scales;
  keep.reserve(V);
  for (Eigen::Index v = 0; v < V; ++v) {
    const Vector col = scan.values.col(v);
    const double c = median(col);
    const double s = mad(col) * kMadToSd;
    if (s < 1e-12) {
      dropped.push_back(v);
    } else {
      keep.push_back(v);
      centers.push_back(c);
      scales.push_back(s);
    }
  }
  if (keep.empty()) throw ScrubError("robust_standardize: no usable locations");

  StandardizedScan out;
  out.values.resize(T, static_cast<Eigen::Index>(keep.size()));
  out.center.resize(static_cast<Eigen::Index>(keep.size()));
  out.scale.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) =
        (scan.values.col(keep[j]).array() - centers[j]) / scales[j];
    out.center[static_cast<Eigen::Index>(j)] = centers[j];
    out.scale[static_cast<Eigen::Index>(j)] = scales[j];
  }
  out.dropped_columns = std::move(dropped);
  out.tr_seconds = scan.tr_seconds;
  return out;
}

/// Type-II DCT columns, half-sample phase, unit-normalized:
/// column k (1-based) proportional to cos(pi * k * (t + 0.5) / T).
inline DctBasis dct_basis(Eigen::Index T, Eigen::Index K) {
  if (K < 1 || K >= T) throw ScrubError("dct_basis: need 1 <= K < T");
  DctBasis b;
  b.values.resize(T, K);
  for (Eigen::Index k = 1; k <= K; ++k) {
    for (Eigen::Index t = 0; t < T; ++t) {
      b.values(t, k - 1) = std::cos(M_PI * static_cast<double>(k) *
                                    (static_cast<double>(t) + 0.5) /
                                    static_cast<double>(T));
    }
    b.values.col(k - 1).normalize();
  }
  return b;
}

}  // namespace scrub
