// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each check is self-contained and uses independent oracles where
// the library result is nontrivial.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include "scrub/scrub.hpp"
#include "tv_oracle.hpp"

using scrub::Matrix;
using scrub::Vector;

namespace {

int failures = 0;

void report(int n, bool pass, const std::string& what) {
  std::printf("criterion %2d: %s  %s\n", n, pass ? "PASS" : "FAIL", what.c_str());
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

scrub::StandardizedScan wrap(const Matrix& values) {
  scrub::StandardizedScan s;
  s.values = values;
  return s;
}

// ---------------------------------------------------------------------------

void criterion_1_leverage_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  scrub::Rng rng(1001);
  bool ok = true;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const auto T = 30 + static_cast<Eigen::Index>(rng.below(90));
    const auto V = 10 + static_cast<Eigen::Index>(rng.below(30));
    const auto Qmax = std::min<Eigen::Index>(8, std::min(T, V) - 1);
    const auto Q = 1 + static_cast<Eigen::Index>(rng.below(
                           static_cast<std::uint64_t>(Qmax)));
    auto proj = scrub::pca_project(wrap(rng.gaussian_matrix(T, V)), Q);
    proj.selected.clear();
    for (Eigen::Index q = 0; q < Q; ++q)
      if (rng.uniform() < 0.6) proj.selected.insert(q);
    const Vector lev = scrub::leverage(proj);
    const double total = lev.sum();
    if (std::abs(total - static_cast<double>(proj.selected.size())) >= 1e-8)
      ok = false;
    for (Eigen::Index t = 0; t < T; ++t)
      if (lev[t] < -1e-12 || lev[t] > 1.0 + 1e-12) ok = false;
  }
  const double dt = seconds_since(t0);
  report(1, ok && dt < 10.0,
         "leverage sums to the selected count and stays in [0,1] "
         "(100 fuzzed projections, " + std::to_string(dt).substr(0, 4) + " s)");
}

void criterion_2_fusedpca_pca() {
  const auto t0 = std::chrono::steady_clock::now();
  scrub::Rng rng(1002);
  bool factors_ok = true, monotone_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix Y = rng.gaussian_matrix(200, 100);
    scrub::FusedPcaOptions zero;
    zero.kappa = 0.0;
    const auto fp = scrub::fusedpca_project(wrap(Y), 2, zero);
    const auto pc = scrub::pca_project(wrap(Y), 2);
    for (Eigen::Index q = 0; q < 2; ++q) {
      const double align =
          std::abs(fp.timecourses.col(q).dot(pc.timecourses.col(q)));
      if (std::abs(align - 1.0) >= 1e-6) factors_ok = false;
      if (std::abs(fp.singular_values[q] - pc.singular_values[q]) >=
          1e-6 * pc.singular_values[q])
        factors_ok = false;
    }
    scrub::FusedPcaOptions tv;
    tv.kappa = 0.5;
    const auto fp_tv = scrub::fusedpca_project(wrap(Y), 2, tv);
    for (const auto& trace : fp_tv.objective_trace)
      for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] > trace[i - 1] + 1e-9) monotone_ok = false;
  }
  const double dt = seconds_since(t0);
  report(2, factors_ok && monotone_ok && dt < 60.0,
         "kappa=0 FusedPCA matches SVD factors; objective monotone "
         "(50 random 200x100 matrices, " + std::to_string(dt).substr(0, 4) +
         " s)");
}

void criterion_3_tv_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  scrub::Rng rng(1003);
  const double kappas[10] = {1e-3, 0.01, 0.05, 0.1, 0.25,
                             0.5,  1.0,  2.0,  5.0, 20.0};
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto T = 2 + static_cast<Eigen::Index>(rng.below(63));
    const Vector b = rng.gaussian_vector(T);
    for (double kappa : kappas) {
      const Vector got = scrub::tv_denoise(b, kappa);
      const Vector want = testoracle::tv_oracle(b, kappa);
      worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    }
  }
  const double dt = seconds_since(t0);
  report(3, worst < 1e-10 && dt < 30.0,
         "fused-lasso solver agrees with the clipping-DP oracle "
         "(200 instances x 10 kappas, max err " +
         std::to_string(worst).substr(0, 8) + ")");
}

void criterion_4_kurtosis_null() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const Eigen::Index T : {Eigen::Index(300), Eigen::Index(1185)}) {
    const auto null = scrub::kurtosis_null_p99(T, 100000, 0);
    scrub::Rng rng(424242 + static_cast<std::uint64_t>(T));
    int hits = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i)
      if (scrub::kurtosis(rng.gaussian_vector(T)) > null.quantile_p99) ++hits;
    const double rate = static_cast<double>(hits) / trials;
    detail += "T=" + std::to_string(T) + " rate=" +
              std::to_string(rate).substr(0, 6) + " ";
    if (rate < 0.007 || rate > 0.013) ok = false;
  }
  // asymptotic vs MC threshold agreement at T = 1185
  const auto as = scrub::kurtosis_null_asymptotic(1185);
  const auto mc = scrub::kurtosis_null_monte_carlo(1185, 100000, 0);
  const double rel = std::abs(as.quantile_p99 - mc.quantile_p99) / mc.quantile_p99;
  detail += "asym/mc rel diff=" + std::to_string(rel).substr(0, 6);
  if (rel >= 0.05) ok = false;
  const double dt = seconds_since(t0);
  report(4, ok && dt < 120.0,
         "Gaussian false-selection rate in [0.007, 0.013]; " + detail);
}

void criterion_5_detrending() {
  scrub::Rng rng(1005);
  const Eigen::Index T = 300;
  const auto null = scrub::kurtosis_null_p99(T, 100000, 0);
  const auto dct = scrub::dct_basis(T, 4);
  Vector t_norm(T);
  for (Eigen::Index t = 0; t < T; ++t)
    t_norm[t] = 2.0 * static_cast<double>(t) / static_cast<double>(T - 1) - 1.0;

  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    const double slope = 2.0 + 0.05 * i;  // trend dominates the raw series
    Vector x = slope * t_norm + 0.2 * rng.gaussian_vector(T);
    const auto spike_at = 10 + static_cast<Eigen::Index>(rng.below(T - 20));
    x[spike_at] += 2.0;
    const double before = scrub::kurtosis(x);
    // detrend: project out intercept + DCT4
    Vector d = x.array() - x.mean();
    d -= dct.values * (dct.values.transpose() * d);
    const double after = scrub::kurtosis(d);
    if (!(before < null.quantile_p99 && after > null.quantile_p99)) ok = false;
  }
  report(5, ok,
         "burst kurtosis crosses the selection threshold only after "
         "detrending (100 trend+burst instances, T=300)");
}

void criterion_6_spike_equals_censor() {
  scrub::Rng rng(1006);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto T = 40 + static_cast<Eigen::Index>(rng.below(60));
    const auto V = 3 + static_cast<Eigen::Index>(rng.below(8));
    scrub::ScanMatrix scan;
    scan.values = rng.gaussian_matrix(T, V);

    scrub::DenoiseSpec spec;
    spec.strategy = scrub::DenoiseStrategy::dct4;
    if (rng.uniform() < 0.5) {
      spec.strategy = scrub::DenoiseStrategy::ccx_mp6;
      spec.x = 2;
      spec.noise_roi_sources["wm"] = rng.gaussian_matrix(T, 12);
      scrub::RealignmentParams rp;
      rp.values = rng.gaussian_matrix(T, 6);
      spec.rp = rp;
    }
    scrub::BoolVec flags(static_cast<std::size_t>(T), false);
    for (auto&& f : flags) f = rng.uniform() < 0.1;

    const auto with_spikes = scrub::build_design(spec, T, &flags);
    const auto spiked = scrub::regress(scan, with_spikes);
    const auto base = scrub::build_design(spec, T);
    const auto censored = scrub::regress_censored(scan, base, flags);
    for (Eigen::Index t = 0; t < T; ++t) {
      if (flags[static_cast<std::size_t>(t)]) continue;
      worst = std::max(worst, (spiked.values.row(t) - censored.values.row(t))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  report(6, worst < 1e-8,
         "spike regression matches censoring on unflagged rows "
         "(100 fuzzed instances, max err " + std::to_string(worst).substr(0, 8) +
         ")");
}

void criterion_7_filter_contract() {
  const double tr = 0.72;
  const auto butter =
      scrub::design_notch(scrub::FilterKind::butterworth10, {0.2, 0.5}, tr);
  const auto cheby =
      scrub::design_notch(scrub::FilterKind::chebyshev2_20db, {0.31, 0.43}, tr);
  const double gb = butter.gain_at(0.35, tr);
  const double gc = cheby.gain_at(0.35, tr);
  bool ok = gb <= std::pow(10.0, -40.0 / 20.0);  // >= 40 dB
  ok = ok && gc <= std::pow(10.0, -20.0 / 20.0); // >= 20 dB
  ok = ok && butter.gain_at(1e-4, tr) >= 0.99 && cheby.gain_at(1e-4, tr) >= 0.99;

  // modFD of a pure respiratory-band sinusoidal RP trace
  const Eigen::Index T = 500;
  scrub::RealignmentParams rp;
  rp.values = Matrix::Zero(T, 6);
  rp.tr_seconds = tr;
  for (Eigen::Index t = 0; t < T; ++t)
    rp.values(t, 0) =
        0.5 * std::sin(2.0 * M_PI * 0.35 * tr * static_cast<double>(t));
  // modFD (lag 4, notch-filtered) against plain unfiltered FD (lag 1)
  const double raw = scrub::fd(rp, 1).mean();
  const double filtered = scrub::fd(rp, 4, cheby).mean();
  ok = ok && filtered < 0.1 * raw;
  report(7, ok,
         "butter 0.35 Hz gain " + std::to_string(gb).substr(0, 8) +
         ", cheby2 " + std::to_string(gc).substr(0, 6) +
         "; filtered respiratory FD " +
         std::to_string(filtered / raw * 100.0).substr(0, 4) + "% of raw");
}

void criterion_8_dvars_null() {
  const Eigen::Index T = 1185, V = 400;
  long flagged = 0, total = 0;
  bool scale_ok = true;
  for (int seed = 0; seed < 50; ++seed) {
    scrub::Rng rng(static_cast<std::uint64_t>(seed) + 5000);
    const Matrix Y = rng.gaussian_matrix(T, V);
    const auto d = scrub::dvars_dual(Y);
    flagged += d.n_flagged();
    total += T;
    if (seed < 10) {
      const auto d3 = scrub::dvars_dual(Matrix(3.0 * Y));
      if (d3.flags != d.flags) scale_ok = false;
    }
  }
  const double rate = static_cast<double>(flagged) / static_cast<double>(total);
  report(8, rate < 0.01 && scale_ok,
         "DVARS null flag rate " + std::to_string(rate).substr(0, 8) +
         " (< 1%), flag set invariant under Y -> 3Y");
}

void criterion_9_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  scrub::SynthSpec spec;  // default grid: burst SNR 5, 10 bursts
  spec.n_subjects = 1;
  spec.n_runs = 1;

  const auto null = scrub::kurtosis_null_p99(spec.T, 100000, 0);
  const auto cheby = scrub::design_notch(scrub::FilterKind::chebyshev2_20db,
                                         {0.31, 0.43}, spec.tr_seconds);
  scrub::DenoiseSpec denoise;
  denoise.strategy = scrub::DenoiseStrategy::dct4;

  long bursts_total = 0, bursts_hit = 0, clean_total = 0, clean_flagged = 0;
  long ica_flags_total = 0, ica_flags_near_motion = 0;
  bool strictly_fewer = true;

  for (int seed = 0; seed < 20; ++seed) {
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto data = scrub::generate(spec);
    const auto& scan = data.scans[0];
    const auto& bursts = data.truth.burst_times[0];

    const auto design = scrub::build_design(denoise, scan.T());
    const auto prelim = scrub::regress(scan, design);
    const auto std_scan = scrub::robust_standardize(prelim);
    const auto Q = scrub::select_dimension(std_scan, scrub::VarianceFraction{0.5});
    auto proj = scrub::ica_project(std_scan, Q, spec.seed);
    proj = scrub::select_artifact_components(proj, null);
    const auto decision =
        scrub::threshold_leverage(scrub::leverage(proj), 3.0);

    const auto score = scrub::score_flags(decision, bursts, 1);
    bursts_total += static_cast<long>(bursts.size());
    bursts_hit += static_cast<long>(
        std::lround(score.sensitivity * static_cast<double>(bursts.size())));
    // pooled specificity bookkeeping
    for (Eigen::Index t = 0; t < scan.T(); ++t) {
      bool near = false;
      for (auto b : bursts)
        if (std::abs(t - b) <= 1) near = true;
      if (near) continue;
      ++clean_total;
      clean_flagged += decision.flags[static_cast<std::size_t>(t)];
    }

    // stringent oracle-motion flagging: low-cutoff modFD, dilated by 1
    const Vector modfd = scrub::fd(data.rps[0], 4, cheby);
    const auto stringent = scrub::threshold_fd(modfd, 0.05);
    const auto stringent_dilated = scrub::expand_flags(stringent.flags, 1, 1);
    if (decision.n_flagged() >= stringent.n_flagged()) strictly_fewer = false;
    for (std::size_t t = 0; t < decision.flags.size(); ++t) {
      if (!decision.flags[t]) continue;
      ++ica_flags_total;
      if (stringent_dilated[t]) ++ica_flags_near_motion;
    }
  }

  const double sensitivity =
      static_cast<double>(bursts_hit) / static_cast<double>(bursts_total);
  const double specificity =
      1.0 - static_cast<double>(clean_flagged) / static_cast<double>(clean_total);
  const double near_motion =
      ica_flags_total
          ? static_cast<double>(ica_flags_near_motion) /
                static_cast<double>(ica_flags_total)
          : 1.0;
  const double dt = seconds_since(t0);
  const bool ok = sensitivity >= 0.9 && specificity >= 0.98 &&
                  strictly_fewer && near_motion >= 0.95 && dt < 300.0;
  report(9, ok,
         "ICA planted-burst sensitivity " + std::to_string(sensitivity).substr(0, 5) +
         ", specificity " + std::to_string(specificity).substr(0, 6) +
         "; flags a strict subset near stringent motion flags (" +
         std::to_string(near_motion).substr(0, 5) + " within +-1; " +
         std::to_string(dt).substr(0, 5) + " s)");
}

void criterion_10_metric_kernels() {
  bool ok = true;
  // ICC hand instance (S=3, R=2): MSB=8, MSW=0.5 -> 7.5/8.5 = 0.88235...
  Matrix z(3, 2);
  z << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  ok = ok && std::abs(scrub::icc31(z) - 7.5 / 8.5) < 1e-6;

  // RMSE constant offset returns |delta| exactly
  const Vector truth = Vector::LinSpaced(10, -1.0, 1.0);
  const Vector est = truth.array() - 0.42;
  ok = ok && std::abs(scrub::rmse_validity({est}, {truth}) - 0.42) < 1e-12;

  // MAC = 0 when nothing is censored (scrubbed FC equals every reference)
  scrub::Rng rng(1010);
  scrub::SynthSpec spec;
  spec.T = 80;
  spec.V = 40;
  spec.P = 4;
  spec.n_bursts = 0;
  const auto data = scrub::generate(spec);
  const Vector u = scrub::fc(data.scans[0], data.parcellation).upper();
  ok = ok && scrub::mac({{u}}, {{{u, u, u}}}) == 0.0;

  // fingerprint self-match rate = 1
  std::vector<scrub::FcMatrix> db;
  for (int s = 0; s < 5; ++s) {
    scrub::FcMatrix m;
    Matrix r = rng.gaussian_matrix(6, 6);
    m.z = (r + r.transpose()) / 2.0;
    m.z.diagonal().setZero();
    m.subject_id = "sub-" + std::to_string(s);
    db.push_back(m);
  }
  ok = ok && scrub::fingerprint(db, db) == 1.0;
  report(10, ok,
         "ICC hand instance 0.88235 (+-1e-6), RMSE |delta| exact, "
         "MAC 0 without censoring, fingerprint self-match 1");
}

void criterion_11_relative_benefit() {
  scrub::SynthSpec spec;
  spec.T = 300;
  spec.V = 200;
  spec.P = 10;
  spec.n_subjects = 6;
  spec.n_runs = 2;
  spec.n_bursts = 10;
  spec.burst_amplitude_sd = 5.0;
  spec.seed = 77;
  const auto data = scrub::generate(spec);
  scrub::Rng rng(1011);

  auto mean_icc = [&](const std::vector<std::vector<scrub::BoolVec>>& flags) {
    const auto P = spec.P;
    const auto n_pairs = scrub::FcMatrix::n_pairs(P);
    std::vector<std::vector<Vector>> uppers(
        static_cast<std::size_t>(spec.n_subjects));
    for (Eigen::Index s = 0; s < spec.n_subjects; ++s)
      for (Eigen::Index r = 0; r < spec.n_runs; ++r) {
        const auto idx = static_cast<std::size_t>(s * spec.n_runs + r);
        const auto* f = flags.empty()
                            ? nullptr
                            : &flags[static_cast<std::size_t>(s)]
                                   [static_cast<std::size_t>(r)];
        uppers[static_cast<std::size_t>(s)].push_back(
            scrub::fc(data.scans[idx], data.parcellation, f).upper());
      }
    double acc = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      Matrix zm(spec.n_subjects, spec.n_runs);
      for (Eigen::Index s = 0; s < spec.n_subjects; ++s)
        for (Eigen::Index r = 0; r < spec.n_runs; ++r)
          zm(s, r) = uppers[static_cast<std::size_t>(s)]
                           [static_cast<std::size_t>(r)]
                           [static_cast<Eigen::Index>(p)];
      acc += scrub::icc31(zm);
    }
    return acc / static_cast<double>(n_pairs);
  };

  // oracle data-driven flags: exactly the planted bursts
  std::vector<std::vector<scrub::BoolVec>> oracle(
      static_cast<std::size_t>(spec.n_subjects));
  // over-aggressive motion-style flags: bursts plus random volumes, >= 18%
  std::vector<std::vector<scrub::BoolVec>> aggressive(
      static_cast<std::size_t>(spec.n_subjects));
  const auto target = static_cast<Eigen::Index>(
      std::ceil(0.18 * static_cast<double>(spec.T)));
  for (Eigen::Index s = 0; s < spec.n_subjects; ++s)
    for (Eigen::Index r = 0; r < spec.n_runs; ++r) {
      const auto idx = static_cast<std::size_t>(s * spec.n_runs + r);
      scrub::BoolVec f(static_cast<std::size_t>(spec.T), false);
      for (auto t : data.truth.burst_times[idx])
        f[static_cast<std::size_t>(t)] = true;
      oracle[static_cast<std::size_t>(s)].push_back(f);
      scrub::BoolVec g = f;
      while (std::count(g.begin(), g.end(), true) < target)
        g[static_cast<std::size_t>(rng.below(
            static_cast<std::uint64_t>(spec.T)))] = true;
      aggressive[static_cast<std::size_t>(s)].push_back(g);
    }

  const double icc_none = mean_icc({});
  const double icc_oracle = mean_icc(oracle);
  const double icc_aggressive = mean_icc(aggressive);
  const bool ok = icc_oracle >= icc_none && icc_aggressive < icc_oracle;
  report(11, ok,
         "mean ICC: unscrubbed " + std::to_string(icc_none).substr(0, 5) +
         ", oracle scrubbing " + std::to_string(icc_oracle).substr(0, 5) +
         ", over-aggressive (>=18%) " +
         std::to_string(icc_aggressive).substr(0, 5));
}

}  // namespace

int main() {
  criterion_1_leverage_identity();
  criterion_2_fusedpca_pca();
  criterion_3_tv_oracle();
  criterion_4_kurtosis_null();
  criterion_5_detrending();
  criterion_6_spike_equals_censor();
  criterion_7_filter_contract();
  criterion_8_dvars_null();
  criterion_9_end_to_end();
  criterion_10_metric_kernels();
  criterion_11_relative_benefit();
  if (failures) {
    std::printf("%d criteria FAILED\n", failures);
    return 1;
  }
  std::printf("all 11 criteria passed\n");
  return 0;
}
