#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "scrub/rng.hpp"
#include "scrub/stats.hpp"
#include "scrub/types.hpp"

namespace scrub {

/// Location-to-parcel assignment, parcel ids 0..P-1.
struct Parcellation {
  std::vector<Eigen::Index> assignment;  // length V
  std::map<Eigen::Index, std::string> network_of;

  Eigen::Index P() const {
    Eigen::Index p = 0;
    for (auto a : assignment) p = std::max(p, a + 1);
    return p;
  }

  void validate(Eigen::Index V) const {
    if (static_cast<Eigen::Index>(assignment.size()) != V)
      throw ScrubError("Parcellation: assignment length mismatch");
    const auto np = P();
    if (np < 2) throw ScrubError("Parcellation: need at least 2 parcels");
    std::vector<Eigen::Index> count(static_cast<std::size_t>(np), 0);
    for (auto a : assignment) {
      if (a < 0) throw ScrubError("Parcellation: negative parcel id");
      ++count[static_cast<std::size_t>(a)];
    }
    for (auto c : count)
      if (c == 0) throw ScrubError("Parcellation: empty parcel");
  }
};

/// P x P symmetric Fisher-z connectivity matrix, diagonal zeroed.
struct FcMatrix {
  Matrix z;
  std::string subject_id, session_id, run_id;
  Eigen::Index n_volumes_used = 0;
  std::vector<Eigen::Index> constant_parcels;  // zeroed rows/columns

  Eigen::Index P() const { return z.rows(); }

  /// Upper-triangle (excluding diagonal) vectorization, optionally masked.
  Vector upper(const std::vector<bool>* mask = nullptr) const {
    std::vector<double> vals;
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < P(); ++i)
      for (Eigen::Index j = i + 1; j < P(); ++j, ++idx)
        if (!mask || (*mask)[idx]) vals.push_back(z(i, j));
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }

  static std::size_t n_pairs(Eigen::Index P) {
    return static_cast<std::size_t>(P * (P - 1) / 2);
  }
};

inline double fisher_z(double r) {
  const double clip = 1.0 - 1e-12;
  r = std::min(std::max(r, -clip), clip);
  return 0.5 * std::log((1.0 + r) / (1.0 - r));
}

/// Parcel-average unflagged timeseries -> pairwise Pearson -> Fisher z.
/// Constant parcel timecourses get a zero row/column rather than NaN.
inline FcMatrix fc(const ScanMatrix& scan, const Parcellation& parc,
                   const BoolVec* flags = nullptr) {
  parc.validate(scan.V());
  const auto T = scan.T();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = 0; t < T; ++t)
    if (!flags || !(*flags)[static_cast<std::size_t>(t)]) keep.push_back(t);
  if (keep.size() < 3) throw ScrubError("fc: fewer than 3 unflagged volumes");

  const auto P = parc.P();
  Matrix parcel_ts = Matrix::Zero(static_cast<Eigen::Index>(keep.size()), P);
  std::vector<double> parcel_size(static_cast<std::size_t>(P), 0.0);
  for (Eigen::Index v = 0; v < scan.V(); ++v)
    parcel_size[static_cast<std::size_t>(parc.assignment[static_cast<std::size_t>(v)])] += 1.0;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (Eigen::Index v = 0; v < scan.V(); ++v) {
      const auto p = parc.assignment[static_cast<std::size_t>(v)];
      parcel_ts(static_cast<Eigen::Index>(i), p) += scan.values(keep[i], v);
    }
  }
  for (Eigen::Index p = 0; p < P; ++p)
    parcel_ts.col(p) /= parcel_size[static_cast<std::size_t>(p)];

  // center and norm per parcel
  Vector norms(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    parcel_ts.col(p).array() -= parcel_ts.col(p).mean();
    norms[p] = parcel_ts.col(p).norm();
  }

  FcMatrix out;
  out.subject_id = scan.subject_id;
  out.session_id = scan.session_id;
  out.run_id = scan.run_id;
  out.n_volumes_used = static_cast<Eigen::Index>(keep.size());
  out.z = Matrix::Zero(P, P);
  for (Eigen::Index p = 0; p < P; ++p)
    if (norms[p] < 1e-12) out.constant_parcels.push_back(p);

  for (Eigen::Index i = 0; i < P; ++i) {
    if (norms[i] < 1e-12) continue;
    for (Eigen::Index j = i + 1; j < P; ++j) {
      if (norms[j] < 1e-12) continue;
      const double r = parcel_ts.col(i).dot(parcel_ts.col(j)) / (norms[i] * norms[j]);
      const double z = fisher_z(r);
      out.z(i, j) = z;
      out.z(j, i) = z;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ICC(3,1)

/// Two-way mixed, single-measure intraclass correlation from an S x R
/// matrix of per-(subject, run) values:
///   ICC = (MSB - MSW) / (MSB + (R-1) MSW).
inline double icc31(const Matrix& z_values) {
  const auto S = z_values.rows();
  const auto R = z_values.cols();
  if (S < 2 || R < 2) throw ScrubError("icc31: need S >= 2 and R >= 2");
  const Vector subject_means = z_values.rowwise().mean();
  const double grand = subject_means.mean();
  const double msb = static_cast<double>(R) / static_cast<double>(S - 1) *
                     (subject_means.array() - grand).square().sum();
  double ssw = 0.0;
  for (Eigen::Index s = 0; s < S; ++s)
    ssw += (z_values.row(s).array() - subject_means[s]).square().sum();
  const double msw = ssw / static_cast<double>(S * (R - 1));
  const double denom = msb + static_cast<double>(R - 1) * msw;
  if (std::abs(denom) < 1e-300) throw ScrubError("icc31: degenerate variance");
  return (msb - msw) / denom;
}

// ---------------------------------------------------------------------------
// Fingerprinting

/// Nearest-correlation subject identification. Database and query must
/// contain one FC matrix per subject each. Ties count as non-matches.
inline double fingerprint(const std::vector<FcMatrix>& database,
                          const std::vector<FcMatrix>& query,
                          const std::vector<bool>* mask = nullptr) {
  if (database.empty() || database.size() != query.size())
    throw ScrubError("fingerprint: database/query size mismatch");
  Eigen::Index matches = 0;
  for (const auto& q : query) {
    const Vector qv = q.upper(mask);
    if (qv.size() < 2) throw ScrubError("fingerprint: mask selects < 2 connections");
    const double qmean = qv.mean();
    const Vector qc = qv.array() - qmean;
    const double qnorm = qc.norm();
    double best = -2.0;
    std::string best_subject;
    bool tie = false;
    for (const auto& d : database) {
      const Vector dv = d.upper(mask);
      const Vector dc = dv.array() - dv.mean();
      const double denom = qnorm * dc.norm();
      const double r = denom > 0 ? qc.dot(dc) / denom : 0.0;
      if (r > best) {
        best = r;
        best_subject = d.subject_id;
        tie = false;
      } else if (r == best) {
        tie = true;
      }
    }
    if (!tie && best_subject == q.subject_id) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(query.size());
}

/// Swap database/query roles and pool the match rate over both directions.
inline double fingerprint_pooled(const std::vector<FcMatrix>& a,
                                 const std::vector<FcMatrix>& b,
                                 const std::vector<bool>* mask = nullptr) {
  return 0.5 * (fingerprint(a, b, mask) + fingerprint(b, a, mask));
}

// ---------------------------------------------------------------------------
// Validity RMSE

/// Mean over (session, subject) of per-session-subject root mean squared
/// error across FC pairs.
inline double rmse_validity(const std::vector<Vector>& estimates,
                            const std::vector<Vector>& truth) {
  if (estimates.size() != truth.size() || estimates.empty())
    throw ScrubError("rmse_validity: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].size() != truth[i].size())
      throw ScrubError("rmse_validity: shape mismatch");
    acc += std::sqrt((estimates[i] - truth[i]).squaredNorm() /
                     static_cast<double>(estimates[i].size()));
  }
  return acc / static_cast<double>(estimates.size());
}

// ---------------------------------------------------------------------------
// Mean absolute change vs random scrubbing

/// scrubbed[s][r] is the FC pair vector for subject s, run r;
/// random_scrub[s][r][q] is the FC pair vector under random censoring
/// permutation q (same censoring count as the evaluated scrubbing).
inline double mac(const std::vector<std::vector<Vector>>& scrubbed,
                  const std::vector<std::vector<std::vector<Vector>>>& random_scrub) {
  if (scrubbed.empty() || scrubbed.size() != random_scrub.size())
    throw ScrubError("mac: shape mismatch");
  const auto S = scrubbed.size();
  const auto R = scrubbed[0].size();
  const auto P = scrubbed[0][0].size();
  double acc = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    Vector mean_delta = Vector::Zero(P);
    for (std::size_t r = 0; r < R; ++r) {
      const auto& randoms = random_scrub[s][r];
      if (randoms.empty()) throw ScrubError("mac: need at least one permutation");
      Vector rand_mean = Vector::Zero(P);
      for (const auto& v : randoms) rand_mean += v;
      rand_mean /= static_cast<double>(randoms.size());
      mean_delta += scrubbed[s][r] - rand_mean;
    }
    mean_delta /= static_cast<double>(R);
    acc += mean_delta.cwiseAbs().sum();
  }
  return acc / (static_cast<double>(S) * static_cast<double>(P));
}

/// Uniform random censoring of exactly n_censor volumes, for MAC's
/// random-scrubbing reference.
inline BoolVec random_flags(Eigen::Index T, Eigen::Index n_censor, Rng& rng) {
  BoolVec flags(static_cast<std::size_t>(T), false);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) pool[static_cast<std::size_t>(t)] = t;
  for (Eigen::Index i = 0; i < n_censor; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(T - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    flags[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])] = true;
  }
  return flags;
}

}  // namespace scrub
