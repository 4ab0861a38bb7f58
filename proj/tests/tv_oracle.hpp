#pragma once

// Exact fused-lasso oracle via the clipping dynamic program: the message
// derivative is a nondecreasing polyline; each step clips it to [-k, k]
// (recording the clamp interval) and adds the next quadratic's derivative.
// Backtracking clamps each u_t to its recorded interval. Independent of the
// taut-string implementation in the library.

#include <stdexcept>
#include <utility>
#include <vector>

#include "scrub/types.hpp"

namespace testoracle {

struct Polyline {
  // derivative y(x): slope s_left for x < knots.front().x, linear between
  // knots, slope s_right beyond knots.back().x
  std::vector<std::pair<double, double>> knots;  // (x, y), x increasing
  double s_left = 1.0, s_right = 1.0;

  double eval(double x) const {
    if (x <= knots.front().first)
      return knots.front().second - s_left * (knots.front().first - x);
    if (x >= knots.back().first)
      return knots.back().second + s_right * (x - knots.back().first);
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (x <= knots[i].first) {
        const auto& [x0, y0] = knots[i - 1];
        const auto& [x1, y1] = knots[i];
        if (x1 == x0) return y1;
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
      }
    }
    return knots.back().second;
  }

  // smallest x with y(x) = level (derivative nondecreasing)
  double solve(double level) const {
    if (knots.front().second >= level) {
      if (s_left <= 0.0) throw std::runtime_error("polyline: flat tail");
      return knots.front().first - (knots.front().second - level) / s_left;
    }
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (knots[i].second >= level) {
        const auto& [x0, y0] = knots[i - 1];
        const auto& [x1, y1] = knots[i];
        if (y1 == y0) return x0;
        return x0 + (x1 - x0) * (level - y0) / (y1 - y0);
      }
    }
    if (s_right <= 0.0) throw std::runtime_error("polyline: flat tail");
    return knots.back().first + (level - knots.back().second) / s_right;
  }
};

inline scrub::Vector tv_oracle(const scrub::Vector& b, double kappa) {
  const auto T = b.size();
  if (kappa <= 0.0) return b;
  Polyline f;
  f.knots = {{b[0], 0.0}};
  f.s_left = f.s_right = 1.0;
  std::vector<std::pair<double, double>> clamp(static_cast<std::size_t>(T));

  for (Eigen::Index t = 1; t < T; ++t) {
    const double lo = f.solve(-kappa);
    const double hi = f.solve(kappa);
    clamp[static_cast<std::size_t>(t - 1)] = {lo, hi};
    // clipped message: flat -kappa left of lo, flat +kappa right of hi
    std::vector<std::pair<double, double>> inner;
    inner.emplace_back(lo, -kappa);
    for (const auto& [x, y] : f.knots)
      if (x > lo && x < hi) inner.emplace_back(x, f.eval(x));
    inner.emplace_back(hi, kappa);
    // add derivative of 1/2 (x - b_t)^2
    for (auto& [x, y] : inner) y += x - b[t];
    f.knots = std::move(inner);
    f.s_left = 1.0;  // flat tail plus the new slope-1 quadratic
    f.s_right = 1.0;
  }

  scrub::Vector u(T);
  u[T - 1] = f.solve(0.0);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const auto& [lo, hi] = clamp[static_cast<std::size_t>(t)];
    u[t] = std::min(std::max(u[t + 1], lo), hi);
  }
  return u;
}

}  // namespace testoracle
