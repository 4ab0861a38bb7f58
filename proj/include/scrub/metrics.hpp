#pragma once

#include <Eigen/QR>
#include <cmath>
#include <optional>

#include "scrub/filters.hpp"
#include "scrub/projection.hpp"
#include "scrub/stats.hpp"
#include "scrub/types.hpp"

namespace scrub {

enum class ScrubMethod { leverage, fd, modfd, dvars };

inline const char* to_string(ScrubMethod m) {
  switch (m) {
    case ScrubMethod::leverage: return "leverage";
    case ScrubMethod::fd: return "fd";
    case ScrubMethod::modfd: return "modfd";
    case ScrubMethod::dvars: return "dvars";
  }
  return "?";
}

/// Threshold rule attached to a ScrubDecision.
struct ThresholdSpec {
  // multiple-of-median (leverage), absolute mm cutoff (FD family), or the
  // dual DVARS rule; unused fields stay at their defaults.
  double median_multiple = 0.0;
  double cutoff_mm = 0.0;
  double zdvars_alpha = 0.0;  // family-wise level for the Bonferroni z
  double pct_cut = 0.0;       // Delta%DVARS cutoff
};

struct ScrubDecision {
  Vector metric;                          // primary per-volume trace
  std::optional<Vector> metric_secondary; // Delta%DVARS for dvars
  BoolVec flags;
  ScrubMethod method = ScrubMethod::leverage;
  ThresholdSpec threshold_spec;
  double median_metric = 0.0;

  Eigen::Index n_flagged() const {
    Eigen::Index n = 0;
    for (bool f : flags) n += f;
    return n;
  }
};

// ---------------------------------------------------------------------------
// Leverage

/// Diagonal of the orthogonal projector onto the selected component
/// timecourses. Empty selection yields an all-zero trace. Rank-deficient
/// selections have their dependent columns dropped.
inline Vector leverage(const ProjectionResult& proj) {
  const auto T = proj.T();
  if (proj.selected.empty()) return Vector::Zero(T);

  Matrix X(T, static_cast<Eigen::Index>(proj.selected.size()));
  Eigen::Index j = 0;
  for (auto q : proj.selected) X.col(j++) = proj.timecourses.col(q);

  // Orthonormal basis of the column space via rank-revealing QR.
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  Matrix Qthin = qr.householderQ() * Matrix::Identity(T, rank);
  return Qthin.array().square().rowwise().sum();
}

inline ScrubDecision threshold_leverage(const Vector& lev, double multiple) {
  if (!(multiple > 0)) throw ScrubError("threshold_leverage: multiple must be > 0");
  ScrubDecision d;
  d.method = ScrubMethod::leverage;
  d.metric = lev;
  d.median_metric = median(lev);
  d.threshold_spec.median_multiple = multiple;
  d.flags.assign(static_cast<std::size_t>(lev.size()), false);
  if (d.median_metric > 0) {
    const double cut = multiple * d.median_metric;
    for (Eigen::Index t = 0; t < lev.size(); ++t)
      if (lev[t] > cut) d.flags[static_cast<std::size_t>(t)] = true;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Framewise displacement

/// FD trace from realignment parameters: rotations converted to arc length
/// on a radius_mm sphere, optional zero-phase notch filtering of each RP
/// column, then lag differences summed in absolute value. FD(t) = 0 for
/// t <= lag by convention.
inline Vector fd(const RealignmentParams& rp, Eigen::Index lag = 1,
                 const NotchFilter& filter = {}, double radius_mm = 50.0) {
  rp.validate();
  const auto T = rp.T();
  if (lag < 1 || lag >= T) throw ScrubError("fd: lag out of range");

  Matrix cols = rp.values;
  cols.rightCols(3) *= radius_mm;
  if (!filter.is_identity())
    for (Eigen::Index c = 0; c < 6; ++c)
      cols.col(c) = filtfilt(filter, cols.col(c));

  Vector out = Vector::Zero(T);
  for (Eigen::Index t = lag; t < T; ++t)
    out[t] = (cols.row(t) - cols.row(t - lag)).cwiseAbs().sum();
  return out;
}

inline ScrubDecision threshold_fd(const Vector& trace, double cutoff_mm,
                                  ScrubMethod method = ScrubMethod::fd) {
  ScrubDecision d;
  d.method = method;
  d.metric = trace;
  d.median_metric = median(trace);
  d.threshold_spec.cutoff_mm = cutoff_mm;
  d.flags.assign(static_cast<std::size_t>(trace.size()), false);
  for (Eigen::Index t = 0; t < trace.size(); ++t)
    if (trace[t] > cutoff_mm) d.flags[static_cast<std::size_t>(t)] = true;
  return d;
}

// ---------------------------------------------------------------------------
// Dual DVARS

/// Dual-cutoff DVARS on denoised data. ZDVARS is the z-transformed
/// chi-squared upper-tail p-value of the halved squared frame difference;
/// Delta%DVARS is the excess over the median as a percentage of the mean
/// signal power. A volume is flagged only when ZDVARS exceeds the
/// one-sided Bonferroni z at family-wise level alpha AND Delta%DVARS
/// exceeds pct_cut.
inline ScrubDecision dvars_dual(const Matrix& Y, double alpha = 0.05,
                                double pct_cut = 5.0) {
  const auto T = Y.rows();
  const auto V = Y.cols();
  if (V == 0) throw ScrubError("dvars_dual: V = 0");
  if (T < 3) throw ScrubError("dvars_dual: need T >= 3");

  Vector D = Vector::Zero(T);  // D(0) defined 0 by convention
  Vector A(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    A[t] = Y.row(t).squaredNorm() / static_cast<double>(V);
    if (t >= 1)
      D[t] = (0.5 * (Y.row(t) - Y.row(t - 1))).squaredNorm() /
             static_cast<double>(V);
  }
  const Vector Dtail = D.tail(T - 1);
  const double D_med = median(Dtail);
  const double mean_A = A.mean();

  ScrubDecision d;
  d.method = ScrubMethod::dvars;
  d.threshold_spec.zdvars_alpha = alpha;
  d.threshold_spec.pct_cut = pct_cut;
  d.median_metric = D_med;
  d.metric = Vector::Zero(T);              // ZDVARS
  Vector pct = Vector::Zero(T);            // Delta%DVARS
  d.flags.assign(static_cast<std::size_t>(T), false);

  if (D_med <= 0 || mean_A <= 0) {
    d.metric_secondary = pct;  // constant data: nothing to flag
    return d;
  }
  const double s2 = [&] {
    const double s = s_hiqr(Dtail);
    return s * s;
  }();
  const double z_cut = normal_quantile(1.0 - alpha / static_cast<double>(T));

  for (Eigen::Index t = 1; t < T; ++t) {
    const double q = D_med * 2.0 * D[t] / s2;
    const double dof = D_med * D_med * 2.0 / s2;
    const double p_upper = chi2_sf(q, dof);
    // z-transformed upper-tail p-value; large frame changes map to large z
    double z =
        -normal_quantile(std::min(std::max(p_upper, 1e-300), 1.0 - 1e-16));
    d.metric[t] = z;
    pct[t] = 100.0 * (D[t] - D_med) / mean_A;
    if (z > z_cut && pct[t] > pct_cut) d.flags[static_cast<std::size_t>(t)] = true;
  }
  d.metric_secondary = std::move(pct);
  return d;
}

// ---------------------------------------------------------------------------

/// Expand flags to neighbors: each flagged volume also censors `before`
/// volumes preceding it and `after` volumes following it.
inline BoolVec expand_flags(const BoolVec& flags, Eigen::Index before,
                            Eigen::Index after) {
  const auto T = static_cast<Eigen::Index>(flags.size());
  BoolVec out(flags.size(), false);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!flags[static_cast<std::size_t>(t)]) continue;
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - before);
    const Eigen::Index hi = std::min(T - 1, t + after);
    for (Eigen::Index u = lo; u <= hi; ++u) out[static_cast<std::size_t>(u)] = true;
  }
  return out;
}

}  // namespace scrub
