#pragma once

#include "scrub/types.hpp"

namespace scrub {

/// Exact solution of the fused-lasso signal approximator
///   argmin_u 1/2 ||u - b||^2 + lambda * sum_t |u_{t+1} - u_t|
/// by Condat's direct (taut-string family) algorithm. O(T) typical.
inline Vector tv_denoise(const Vector& b, double lambda) {
  const Eigen::Index width = b.size();
  Vector out(width);
  if (width == 0) return out;
  if (lambda <= 0.0) return b;

  Eigen::Index k = 0, k0 = 0, kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = b[0] - lambda, vmax = b[0] + lambda;
  const double twolambda = 2.0 * lambda;
  const double minlambda = -lambda;

  for (;;) {
    while (k == width - 1) {
      if (umin < 0.0) {
        do out[k0++] = vmin;
        while (k0 <= kminus);
        umax = (vmin = b[kminus = k = k0]) + (umin = lambda) - vmax;
      } else if (umax > 0.0) {
        do out[k0++] = vmax;
        while (k0 <= kplus);
        umin = (vmax = b[kplus = k = k0]) + (umax = minlambda) - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do out[k0++] = vmin;
        while (k0 <= k);
        return out;
      }
    }
    if ((umin += b[k + 1] - vmin) < minlambda) {
      do out[k0++] = vmin;
      while (k0 <= kminus);
      vmax = (vmin = b[kplus = kminus = k = k0]) + twolambda;
      umin = lambda;
      umax = minlambda;
    } else if ((umax += b[k + 1] - vmax) > lambda) {
      do out[k0++] = vmax;
      while (k0 <= kplus);
      vmin = (vmax = b[kplus = kminus = k = k0]) - twolambda;
      umin = lambda;
      umax = minlambda;
    } else {
      ++k;
      if (umin >= lambda) {
        vmin += (umin - lambda) / static_cast<double>((kminus = k) - k0 + 1);
        umin = lambda;
      }
      if (umax <= minlambda) {
        vmax += (umax + lambda) / static_cast<double>((kplus = k) - k0 + 1);
        umax = minlambda;
      }
    }
  }
}

/// Value of the fused-lasso objective 1/2||u - b||^2 + lambda ||Du||_1.
inline double tv_objective(const Vector& u, const Vector& b, double lambda) {
  double obj = 0.5 * (u - b).squaredNorm();
  for (Eigen::Index t = 0; t + 1 < u.size(); ++t)
    obj += lambda * std::abs(u[t + 1] - u[t]);
  return obj;
}

}  // namespace scrub
