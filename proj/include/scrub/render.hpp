#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "scrub/metrics.hpp"
#include "scrub/stats.hpp"
#include "scrub/types.hpp"

namespace scrub {

/// Grayplot: binary 8-bit PGM, one pixel row per location, one column per
/// volume. Intensities windowed to the 2nd-98th percentile of the data.
inline std::string grayplot_pgm(const Matrix& values) {
  const auto T = values.rows();
  const auto V = values.cols();
  if (T < 1 || V < 1) throw ScrubError("grayplot_pgm: empty matrix");

  Vector flat(T * V);
  Eigen::Index k = 0;
  for (Eigen::Index v = 0; v < V; ++v)
    for (Eigen::Index t = 0; t < T; ++t) flat[k++] = values(t, v);
  const double lo = quantile(flat, 0.02);
  const double hi = quantile(flat, 0.98);
  const double span = hi - lo;

  std::ostringstream out;
  out << "P5\n" << T << ' ' << V << "\n255\n";
  std::string pixels;
  pixels.reserve(static_cast<std::size_t>(T * V));
  for (Eigen::Index v = 0; v < V; ++v)
    for (Eigen::Index t = 0; t < T; ++t) {
      double g = span > 0 ? (values(t, v) - lo) / span : 0.5;
      g = std::min(1.0, std::max(0.0, g));
      pixels.push_back(static_cast<char>(static_cast<unsigned char>(
          std::lround(g * 255.0))));
    }
  out << pixels;
  return out.str();
}

/// Metric trace as a standalone SVG line plot. Threshold rule lines are
/// drawn dashed; flagged volumes get tick marks along the top edge.
inline std::string metric_trace_svg(const ScrubDecision& d,
                                    const std::string& title = "") {
  const auto T = d.metric.size();
  if (T < 2) throw ScrubError("metric_trace_svg: need at least 2 volumes");
  const int width = 900, height = 260, pad = 40;

  std::vector<double> thresholds;
  if (d.threshold_spec.median_multiple > 0 && d.median_metric > 0)
    thresholds.push_back(d.threshold_spec.median_multiple * d.median_metric);
  if (d.threshold_spec.cutoff_mm > 0)
    thresholds.push_back(d.threshold_spec.cutoff_mm);
  if (d.method == ScrubMethod::dvars && d.threshold_spec.zdvars_alpha > 0)
    thresholds.push_back(normal_quantile(
        1.0 - d.threshold_spec.zdvars_alpha / static_cast<double>(T)));

  double lo = d.metric.minCoeff(), hi = d.metric.maxCoeff();
  for (double t : thresholds) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double xscale = static_cast<double>(width - 2 * pad) / static_cast<double>(T - 1);
  auto px = [&](Eigen::Index t) { return pad + xscale * static_cast<double>(t); };
  auto py = [&](double y) {
    return height - pad - (y - lo) / (hi - lo) * (height - 2 * pad);
  };

  std::ostringstream out;
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    out << "<text x=\"" << pad << "\" y=\"20\" font-size=\"14\">" << title
        << "</text>\n";
  for (double th : thresholds)
    out << "<line x1=\"" << pad << "\" y1=\"" << py(th) << "\" x2=\""
        << width - pad << "\" y2=\"" << py(th)
        << "\" stroke=\"red\" stroke-dasharray=\"6 4\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
  for (Eigen::Index t = 0; t < T; ++t)
    out << px(t) << ',' << py(d.metric[t]) << ' ';
  out << "\"/>\n";
  for (Eigen::Index t = 0; t < T; ++t)
    if (d.flags[static_cast<std::size_t>(t)])
      out << "<line x1=\"" << px(t) << "\" y1=\"" << pad - 12 << "\" x2=\""
          << px(t) << "\" y2=\"" << pad << "\" stroke=\"orange\"/>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace scrub
