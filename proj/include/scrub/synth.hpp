#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "scrub/fc.hpp"
#include "scrub/metrics.hpp"
#include "scrub/rng.hpp"
#include "scrub/types.hpp"

namespace scrub {

/// Generator settings for synthetic multi-subject, multi-run datasets with
/// known structure: subject-specific low-rank signal over a parcellation,
/// AR(1) noise, polynomial drift, respiratory-band realignment oscillation,
/// and planted spatially structured burst artifacts.
struct SynthSpec {
  Eigen::Index T = 600;
  Eigen::Index V = 400;
  Eigen::Index P = 20;
  Eigen::Index n_subjects = 1;
  Eigen::Index n_runs = 1;
  double tr_seconds = 0.72;
  Eigen::Index signal_rank = 6;
  // per-location signal sd relative to the unit-variance noise; kept below 1
  // so planted bursts can outrank the noise bulk in a variance-ordered
  // decomposition, as real burst artifacts do
  double signal_amplitude = 0.5;
  double ar1_phi = 0.3;
  double drift_amplitude = 1.0;

  // bursts: explicit per-run times, or n_bursts random placements per scan
  std::vector<std::vector<Eigen::Index>> burst_times;
  Eigen::Index n_bursts = 10;
  double burst_amplitude_sd = 5.0;   // per affected location, noise sd is 1
  double burst_density = 0.4;        // fraction of locations touched per burst

  // realignment parameters
  double resp_freq_hz = 0.3;
  double resp_amplitude_mm = 0.1;
  double walk_step_mm = 0.005;
  double motion_coupling = 1.0;  // fraction of bursts with a co-timed RP step
  Eigen::Index motion_lag = 0;   // RP step occurs burst_time + lag
  double motion_step_mm = 0.3;

  std::uint64_t seed = 0;

  void validate() const {
    if (T < 8 || V < 2 || P < 2 || P > V) throw ScrubError("SynthSpec: bad dimensions");
    if (n_subjects < 1 || n_runs < 1) throw ScrubError("SynthSpec: bad counts");
    if (!(tr_seconds > 0)) throw ScrubError("SynthSpec: bad tr");
    if (signal_rank < 1) throw ScrubError("SynthSpec: bad signal_rank");
    if (signal_amplitude < 0) throw ScrubError("SynthSpec: bad signal_amplitude");
    if (ar1_phi < 0 || ar1_phi > 0.9) throw ScrubError("SynthSpec: ar1_phi outside [0, 0.9]");
    if (!(burst_density > 0 && burst_density <= 1))
      throw ScrubError("SynthSpec: burst_density outside (0, 1]");
    for (const auto& run : burst_times)
      for (auto t : run)
        if (t < 1 || t >= T) throw ScrubError("SynthSpec: burst index out of range");
  }
};

struct GroundTruth {
  std::vector<FcMatrix> true_fc;                       // per subject
  std::vector<std::vector<Eigen::Index>> burst_times;  // per scan
  std::vector<ScanMatrix> clean_scans;                 // per scan
};

struct SynthDataset {
  std::vector<ScanMatrix> scans;  // subject-major: scan of (s, r) at s*n_runs+r
  std::vector<RealignmentParams> rps;
  Parcellation parcellation;
  GroundTruth truth;

  Eigen::Index scan_index(Eigen::Index subject, Eigen::Index run,
                          Eigen::Index n_runs) const {
    return subject * n_runs + run;
  }
};

namespace detail {

/// Stationary AR(1) series with unit marginal variance.
inline Vector ar1_series(Eigen::Index T, double phi, Rng& rng) {
  Vector x(T);
  const double innov_sd = std::sqrt(1.0 - phi * phi);
  x[0] = rng.gaussian();
  for (Eigen::Index t = 1; t < T; ++t)
    x[t] = phi * x[t - 1] + innov_sd * rng.gaussian();
  return x;
}

inline std::vector<Eigen::Index> draw_burst_times(Eigen::Index T,
                                                  Eigen::Index n_bursts, Rng& rng) {
  std::vector<Eigen::Index> times;
  std::vector<bool> taken(static_cast<std::size_t>(T), false);
  taken[0] = true;  // keep t = 0 clean so frame-difference metrics can see bursts
  while (static_cast<Eigen::Index>(times.size()) < n_bursts) {
    const auto t = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(T)));
    // enforce separation so halo windows of neighboring bursts stay distinct
    bool ok = !taken[static_cast<std::size_t>(t)];
    for (Eigen::Index d = -3; ok && d <= 3; ++d) {
      const auto u = t + d;
      if (u >= 0 && u < T && taken[static_cast<std::size_t>(u)]) ok = false;
    }
    if (ok) {
      taken[static_cast<std::size_t>(t)] = true;
      times.push_back(t);
    }
  }
  std::sort(times.begin(), times.end());
  return times;
}

}  // namespace detail

/// Deterministic synthetic dataset. The clean scans (signal + noise + drift)
/// are drawn from RNG streams separate from the burst and motion streams,
/// so they do not change when contamination parameters change.
inline SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  SynthDataset out;

  // round-robin parcellation
  out.parcellation.assignment.resize(static_cast<std::size_t>(spec.V));
  for (Eigen::Index v = 0; v < spec.V; ++v)
    out.parcellation.assignment[static_cast<std::size_t>(v)] = v % spec.P;
  std::vector<double> parcel_size(static_cast<std::size_t>(spec.P), 0.0);
  for (auto a : out.parcellation.assignment) parcel_size[static_cast<std::size_t>(a)] += 1.0;

  // shared parcel-level loading structure plus subject-specific offsets
  Rng load_rng = Rng::derive(spec.seed, 1);
  const double shared_scale =
      spec.signal_amplitude / std::sqrt(static_cast<double>(spec.signal_rank));
  Matrix L_shared = shared_scale * load_rng.gaussian_matrix(spec.P, spec.signal_rank);

  const auto n_scans = spec.n_subjects * spec.n_runs;
  out.scans.reserve(static_cast<std::size_t>(n_scans));
  out.rps.reserve(static_cast<std::size_t>(n_scans));
  out.truth.burst_times.resize(static_cast<std::size_t>(n_scans));
  out.truth.clean_scans.reserve(static_cast<std::size_t>(n_scans));

  for (Eigen::Index s = 0; s < spec.n_subjects; ++s) {
    Rng subj_rng = Rng::derive(spec.seed, 2, static_cast<std::uint64_t>(s));
    Matrix L = L_shared +
               0.5 * shared_scale * subj_rng.gaussian_matrix(spec.P, spec.signal_rank);

    // analytic FC of the parcel-mean series: signal covariance L L^T plus
    // the averaged-noise variance on the diagonal
    Matrix cov = L * L.transpose();
    FcMatrix truth_fc;
    truth_fc.subject_id = "sub-" + std::to_string(s);
    truth_fc.z = Matrix::Zero(spec.P, spec.P);
    for (Eigen::Index i = 0; i < spec.P; ++i) {
      const double vi = cov(i, i) + 1.0 / parcel_size[static_cast<std::size_t>(i)];
      for (Eigen::Index j = i + 1; j < spec.P; ++j) {
        const double vj = cov(j, j) + 1.0 / parcel_size[static_cast<std::size_t>(j)];
        const double z = fisher_z(cov(i, j) / std::sqrt(vi * vj));
        truth_fc.z(i, j) = z;
        truth_fc.z(j, i) = z;
      }
    }
    out.truth.true_fc.push_back(std::move(truth_fc));

    for (Eigen::Index r = 0; r < spec.n_runs; ++r) {
      const auto scan_idx = s * spec.n_runs + r;
      const auto key = static_cast<std::uint64_t>(scan_idx);
      Rng base_rng = Rng::derive(spec.seed, 3, key);
      Rng burst_rng = Rng::derive(spec.seed, 4, key);
      Rng rp_rng = Rng::derive(spec.seed, 5, key);

      // clean scan: low-rank signal + AR(1) noise + polynomial drift
      Matrix factors = base_rng.gaussian_matrix(spec.T, spec.signal_rank);
      Matrix Y(spec.T, spec.V);
      for (Eigen::Index v = 0; v < spec.V; ++v) {
        const auto p = out.parcellation.assignment[static_cast<std::size_t>(v)];
        Y.col(v) = factors * L.row(p).transpose() +
                   detail::ar1_series(spec.T, spec.ar1_phi, base_rng);
      }
      if (spec.drift_amplitude > 0) {
        Vector t_norm(spec.T);
        for (Eigen::Index t = 0; t < spec.T; ++t)
          t_norm[t] = 2.0 * static_cast<double>(t) / static_cast<double>(spec.T - 1) - 1.0;
        for (Eigen::Index v = 0; v < spec.V; ++v) {
          const double c1 = base_rng.gaussian();
          const double c2 = base_rng.gaussian();
          Y.col(v) += spec.drift_amplitude *
                      (c1 * t_norm + c2 * (1.5 * t_norm.array().square() - 0.5).matrix());
        }
      }

      ScanMatrix clean;
      clean.values = Y;
      clean.tr_seconds = spec.tr_seconds;
      clean.subject_id = "sub-" + std::to_string(s);
      clean.session_id = "ses-0";
      clean.run_id = "run-" + std::to_string(r);
      out.truth.clean_scans.push_back(clean);

      // bursts
      std::vector<Eigen::Index> times;
      if (!spec.burst_times.empty()) {
        times = spec.burst_times[static_cast<std::size_t>(r) % spec.burst_times.size()];
      } else if (spec.n_bursts > 0) {
        times = detail::draw_burst_times(spec.T, spec.n_bursts, burst_rng);
      }
      for (auto t : times) {
        // one sparse spatial pattern per burst, consistent across locations
        for (Eigen::Index v = 0; v < spec.V; ++v)
          if (burst_rng.uniform() < spec.burst_density)
            Y(t, v) += spec.burst_amplitude_sd * burst_rng.gaussian();
      }
      out.truth.burst_times[static_cast<std::size_t>(scan_idx)] = times;

      ScanMatrix scan = clean;
      scan.values = std::move(Y);
      out.scans.push_back(std::move(scan));

      // realignment parameters: smooth walk + respiratory sinusoid + steps
      Matrix rp = Matrix::Zero(spec.T, 6);
      for (Eigen::Index c = 0; c < 6; ++c) {
        const double step = c < 3 ? spec.walk_step_mm : spec.walk_step_mm / 50.0;
        double acc = 0.0;
        for (Eigen::Index t = 0; t < spec.T; ++t) {
          acc += step * rp_rng.gaussian();
          rp(t, c) = acc;
        }
      }
      for (Eigen::Index t = 0; t < spec.T; ++t) {
        const double ph = 2.0 * M_PI * spec.resp_freq_hz * spec.tr_seconds *
                          static_cast<double>(t);
        rp(t, 1) += spec.resp_amplitude_mm * std::sin(ph);
        rp(t, 4) += spec.resp_amplitude_mm / 50.0 * std::cos(ph);
      }
      for (auto t : times) {
        if (rp_rng.uniform() >= spec.motion_coupling) continue;
        const auto at = std::min(spec.T - 1, std::max<Eigen::Index>(0, t + spec.motion_lag));
        const auto col = static_cast<Eigen::Index>(rp_rng.below(3));
        const double sign = rp_rng.uniform() < 0.5 ? -1.0 : 1.0;
        for (Eigen::Index u = at; u < spec.T; ++u)
          rp(u, col) += sign * spec.motion_step_mm;
      }
      RealignmentParams rpp;
      rpp.values = std::move(rp);
      rpp.tr_seconds = spec.tr_seconds;
      out.rps.push_back(std::move(rpp));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

struct FlagScore {
  double sensitivity = 0.0;
  double specificity = 1.0;
};

/// A burst counts as detected when any flag lies within +-halo volumes of
/// it. Specificity is computed over volumes strictly outside every burst's
/// halo window.
inline FlagScore score_flags(const BoolVec& flags,
                             const std::vector<Eigen::Index>& burst_times,
                             Eigen::Index halo) {
  const auto T = static_cast<Eigen::Index>(flags.size());
  if (halo < 0) throw ScrubError("score_flags: negative halo");
  for (auto t : burst_times)
    if (t < 0 || t >= T) throw ScrubError("score_flags: burst index out of range");

  FlagScore score;
  if (!burst_times.empty()) {
    Eigen::Index hits = 0;
    for (auto t : burst_times) {
      bool hit = false;
      for (Eigen::Index u = std::max<Eigen::Index>(0, t - halo);
           u <= std::min(T - 1, t + halo); ++u)
        if (flags[static_cast<std::size_t>(u)]) hit = true;
      hits += hit;
    }
    score.sensitivity =
        static_cast<double>(hits) / static_cast<double>(burst_times.size());
  }

  Eigen::Index clean = 0, false_pos = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    bool near = false;
    for (auto b : burst_times)
      if (std::abs(t - b) <= halo) near = true;
    if (near) continue;
    ++clean;
    false_pos += flags[static_cast<std::size_t>(t)];
  }
  if (clean > 0)
    score.specificity = 1.0 - static_cast<double>(false_pos) / static_cast<double>(clean);
  return score;
}

inline FlagScore score_flags(const ScrubDecision& decision,
                             const std::vector<Eigen::Index>& burst_times,
                             Eigen::Index halo) {
  return score_flags(decision.flags, burst_times, halo);
}

}  // namespace scrub
