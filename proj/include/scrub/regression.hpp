#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "scrub/metrics.hpp"
#include "scrub/standardize.hpp"
#include "scrub/types.hpp"

namespace scrub {

enum class DenoiseStrategy { mpp, dct4, ccx, p2, p9, p36, ccx_mp6, ccx_mp24 };

inline const char* to_string(DenoiseStrategy s) {
  switch (s) {
    case DenoiseStrategy::mpp: return "mpp";
    case DenoiseStrategy::dct4: return "dct4";
    case DenoiseStrategy::ccx: return "ccx";
    case DenoiseStrategy::p2: return "p2";
    case DenoiseStrategy::p9: return "p9";
    case DenoiseStrategy::p36: return "p36";
    case DenoiseStrategy::ccx_mp6: return "ccx_mp6";
    case DenoiseStrategy::ccx_mp24: return "ccx_mp24";
  }
  return "?";
}

/// Which nuisance regressors to assemble. Noise-ROI timeseries and the
/// global signal arrive as precomputed inputs; no voxel masks are handled
/// here.
struct DenoiseSpec {
  DenoiseStrategy strategy = DenoiseStrategy::ccx_mp6;
  int x = 2;  // aCompCor components per noise ROI
  bool include_dct = true;
  Eigen::Index n_dct = 4;
  std::map<std::string, Matrix> noise_roi_sources;  // name -> T x Vr
  std::optional<Vector> global_signal;
  std::optional<RealignmentParams> rp;

  void validate() const {
    if (strategy == DenoiseStrategy::ccx || strategy == DenoiseStrategy::ccx_mp6 ||
        strategy == DenoiseStrategy::ccx_mp24) {
      if (x < 1 || x > 10) throw ScrubError("DenoiseSpec: ccx requires 1 <= x <= 10");
    }
  }
};

struct DesignMatrix {
  Matrix values;                         // T x M
  std::vector<std::string> column_labels;
  Eigen::Index rank = 0;
  std::vector<std::string> dropped_labels;  // collinear columns removed in fit

  Eigen::Index T() const { return values.rows(); }
  Eigen::Index M() const { return values.cols(); }
};

// ---------------------------------------------------------------------------
// Regressor families

/// Top-x left singular vectors of each (column-centered) noise-ROI
/// timeseries matrix.
inline std::vector<std::pair<std::string, Vector>> acompcor_regressors(
    const std::map<std::string, Matrix>& roi_timeseries, int x) {
  std::vector<std::pair<std::string, Vector>> cols;
  for (const auto& [name, roi] : roi_timeseries) {
    Matrix centered = roi.rowwise() - roi.colwise().mean();
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    const double tol = s.size() ? s[0] * std::max(roi.rows(), roi.cols()) * 1e-12 : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s[i] > tol) ++rank;
    if (x > rank)
      throw ScrubError("acompcor: x exceeds rank of ROI '" + name + "'");
    for (int j = 0; j < x; ++j)
      cols.emplace_back("noise_pc(" + name + "," + std::to_string(j + 1) + ")",
                        svd.matrixU().col(j));
  }
  return cols;
}

/// Raw RPs (order 6) or RPs + one-back differences + squares + squared
/// one-back differences (order 24). First difference row is zero.
inline std::vector<std::pair<std::string, Vector>> rp_expansion(
    const RealignmentParams& rp, int order) {
  rp.validate();
  if (order != 6 && order != 24) throw ScrubError("rp_expansion: order must be 6 or 24");
  const auto T = rp.T();
  std::vector<std::pair<std::string, Vector>> cols;
  for (int i = 0; i < 6; ++i)
    cols.emplace_back("rp(" + std::to_string(i + 1) + ")", rp.values.col(i));
  if (order == 24) {
    Matrix diff = Matrix::Zero(T, 6);
    diff.bottomRows(T - 1) =
        rp.values.bottomRows(T - 1) - rp.values.topRows(T - 1);
    for (int i = 0; i < 6; ++i)
      cols.emplace_back("rp_derivative(" + std::to_string(i + 1) + ")", diff.col(i));
    for (int i = 0; i < 6; ++i)
      cols.emplace_back("rp_square(" + std::to_string(i + 1) + ")",
                        rp.values.col(i).array().square().matrix());
    for (int i = 0; i < 6; ++i)
      cols.emplace_back("rp_square_derivative(" + std::to_string(i + 1) + ")",
                        diff.col(i).array().square().matrix());
  }
  return cols;
}

namespace detail {

inline void append_expansion_of(
    std::vector<std::pair<std::string, Vector>>& cols, Eigen::Index T) {
  // one-back differences, squares, squared differences of the current set
  const auto base = cols;
  for (const auto& [label, v] : base) {
    Vector d = Vector::Zero(T);
    d.tail(T - 1) = v.tail(T - 1) - v.head(T - 1);
    cols.emplace_back(label + "_derivative", d);
  }
  for (const auto& [label, v] : base)
    cols.emplace_back(label + "_square", v.array().square().matrix());
  for (std::size_t i = base.size(); i < base.size() * 2; ++i) {
    const std::string label = cols[i].first + "_square";
    Vector sq = cols[i].second.array().square();
    cols.emplace_back(label, std::move(sq));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Design assembly and regression

/// Intercept + optional DCT bases + strategy regressors + one spike column
/// per flagged volume.
inline DesignMatrix build_design(const DenoiseSpec& spec, Eigen::Index T,
                                 const BoolVec* flags = nullptr) {
  spec.validate();
  if (flags && static_cast<Eigen::Index>(flags->size()) != T)
    throw ScrubError("build_design: flags length mismatch");

  std::vector<std::pair<std::string, Vector>> cols;
  cols.emplace_back("intercept", Vector::Ones(T));
  if (spec.include_dct && spec.strategy != DenoiseStrategy::mpp) {
    const DctBasis dct = dct_basis(T, spec.n_dct);
    for (Eigen::Index k = 0; k < spec.n_dct; ++k)
      cols.emplace_back("dct(" + std::to_string(k + 1) + ")", dct.values.col(k));
  }

  auto need_rp = [&]() -> const RealignmentParams& {
    if (!spec.rp) throw ScrubError("build_design: strategy requires realignment parameters");
    return *spec.rp;
  };
  auto mean_roi_cols = [&] {
    std::vector<std::pair<std::string, Vector>> out;
    for (const auto& [name, roi] : spec.noise_roi_sources)
      out.emplace_back("mean_roi(" + name + ")", roi.rowwise().mean());
    return out;
  };

  switch (spec.strategy) {
    case DenoiseStrategy::mpp:
    case DenoiseStrategy::dct4:
      break;
    case DenoiseStrategy::ccx:
      for (auto& c : acompcor_regressors(spec.noise_roi_sources, spec.x))
        cols.push_back(std::move(c));
      break;
    case DenoiseStrategy::p2:
      for (auto& c : mean_roi_cols()) cols.push_back(std::move(c));
      break;
    case DenoiseStrategy::p9:
    case DenoiseStrategy::p36: {
      std::vector<std::pair<std::string, Vector>> nine = mean_roi_cols();
      for (auto& c : rp_expansion(need_rp(), 6)) nine.push_back(std::move(c));
      if (!spec.global_signal)
        throw ScrubError("build_design: 9P/36P require a global signal input");
      nine.emplace_back("global_signal", *spec.global_signal);
      if (spec.strategy == DenoiseStrategy::p36)
        detail::append_expansion_of(nine, T);
      for (auto& c : nine) cols.push_back(std::move(c));
      break;
    }
    case DenoiseStrategy::ccx_mp6:
    case DenoiseStrategy::ccx_mp24: {
      for (auto& c : acompcor_regressors(spec.noise_roi_sources, spec.x))
        cols.push_back(std::move(c));
      const int order = spec.strategy == DenoiseStrategy::ccx_mp6 ? 6 : 24;
      for (auto& c : rp_expansion(need_rp(), order)) cols.push_back(std::move(c));
      break;
    }
  }

  if (flags) {
    for (Eigen::Index t = 0; t < T; ++t) {
      if (!(*flags)[static_cast<std::size_t>(t)]) continue;
      Vector spike = Vector::Zero(T);
      spike[t] = 1.0;
      cols.emplace_back("spike(" + std::to_string(t) + ")", std::move(spike));
    }
  }

  DesignMatrix d;
  d.values.resize(T, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    d.column_labels.push_back(cols[j].first);
    d.values.col(static_cast<Eigen::Index>(j)) = cols[j].second;
  }
  if (d.M() >= T) throw ScrubError("build_design: design saturates timepoints");

  Eigen::ColPivHouseholderQR<Matrix> qr(d.values);
  qr.setThreshold(1e-10);
  d.rank = qr.rank();
  if (d.rank < d.M()) {
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = 0; j < d.M(); ++j)
      if (perm[j] >= d.rank)
        d.dropped_labels.push_back(d.column_labels[static_cast<std::size_t>(j)]);
  }
  return d;
}

/// Least-squares residuals Y - X beta via rank-revealing QR. Dependent
/// design columns are effectively dropped; residuals are orthogonal to the
/// design column space, and rows with spike regressors come out exactly
/// zero.
inline ScanMatrix regress(const ScanMatrix& scan, const DesignMatrix& design) {
  scan.validate();
  if (design.T() != scan.T()) throw ScrubError("regress: T mismatch");
  if (design.rank < 1) throw ScrubError("regress: design rank must be >= 1");

  Eigen::ColPivHouseholderQR<Matrix> qr(design.values);
  qr.setThreshold(1e-10);
  const Matrix beta = qr.solve(scan.values);

  ScanMatrix out = scan;
  out.values = scan.values - design.values * beta;
  // spike rows are zero in exact arithmetic; pin them
  for (std::size_t j = 0; j < design.column_labels.size(); ++j) {
    const auto& label = design.column_labels[j];
    if (label.rfind("spike(", 0) == 0) {
      const auto t = std::stol(label.substr(6, label.size() - 7));
      out.values.row(t).setZero();
    }
  }
  return out;
}

/// Censor-then-regress reference path: delete flagged rows from data and
/// design, regress, and re-insert zero rows at the flagged positions.
inline ScanMatrix regress_censored(const ScanMatrix& scan,
                                   const DesignMatrix& design,
                                   const BoolVec& flags) {
  const auto T = scan.T();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = 0; t < T; ++t)
    if (!flags[static_cast<std::size_t>(t)]) keep.push_back(t);
  Matrix Yk(static_cast<Eigen::Index>(keep.size()), scan.V());
  Matrix Xk(static_cast<Eigen::Index>(keep.size()), design.M());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    Yk.row(static_cast<Eigen::Index>(i)) = scan.values.row(keep[i]);
    Xk.row(static_cast<Eigen::Index>(i)) = design.values.row(keep[i]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(Xk);
  qr.setThreshold(1e-10);
  const Matrix beta = qr.solve(Yk);
  ScanMatrix out = scan;
  out.values.setZero();
  for (std::size_t i = 0; i < keep.size(); ++i)
    out.values.row(keep[i]) =
        Yk.row(static_cast<Eigen::Index>(i)) -
        Xk.row(static_cast<Eigen::Index>(i)) * beta;
  return out;
}

// ---------------------------------------------------------------------------
// Two-pass pipeline

using ScrubCallback = std::function<ScrubDecision(const ScanMatrix& residuals)>;

struct PipelineResult {
  ScanMatrix residuals;   // final simultaneous regression on the original data
  ScrubDecision decision; // computed on the preliminary residuals
};

/// Pass 1: nuisance-regress without spikes and compute the scrubbing
/// decision on those residuals. Pass 2: regress the original data with
/// spike regressors for every flagged volume.
inline PipelineResult preliminary_then_final(const ScanMatrix& scan,
                                             const DenoiseSpec& spec,
                                             const ScrubCallback& scrub) {
  const DesignMatrix base = build_design(spec, scan.T());
  const ScanMatrix prelim = regress(scan, base);
  ScrubDecision decision = scrub(prelim);
  const DesignMatrix full = build_design(spec, scan.T(), &decision.flags);
  PipelineResult out{regress(scan, full), std::move(decision)};
  return out;
}

}  // namespace scrub
