#include <catch2/catch_amalgamated.hpp>

#include "scrub/filters.hpp"
#include "scrub/metrics.hpp"
#include "scrub/projection.hpp"
#include "scrub/regression.hpp"
#include "scrub/rng.hpp"

using scrub::Matrix;
using scrub::Vector;

namespace {

scrub::RealignmentParams make_rp(Eigen::Index T, double tr = 0.72) {
  scrub::RealignmentParams rp;
  rp.values = Matrix::Zero(T, 6);
  rp.tr_seconds = tr;
  return rp;
}

// dense hat-matrix oracle: H = X (X^T X)^-1 X^T for full-column-rank X
Vector leverage_oracle(const Matrix& X) {
  const Matrix H = X * (X.transpose() * X).inverse() * X.transpose();
  return H.diagonal();
}

}  // namespace

TEST_CASE("leverage equals the hat-matrix diagonal") {
  scrub::Rng rng(21);
  const Eigen::Index T = 80;
  scrub::ProjectionResult proj;
  proj.timecourses = rng.gaussian_matrix(T, 6);
  proj.spatial_maps = Matrix::Zero(6, 3);
  proj.selected = {0, 2, 5};

  Matrix X(T, 3);
  X.col(0) = proj.timecourses.col(0);
  X.col(1) = proj.timecourses.col(2);
  X.col(2) = proj.timecourses.col(5);
  const Vector lev = scrub::leverage(proj);
  CHECK((lev - leverage_oracle(X)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(lev.sum() == Catch::Approx(3.0).margin(1e-10));

  SECTION("empty selection gives zeros") {
    proj.selected.clear();
    CHECK(scrub::leverage(proj).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("duplicated column does not inflate total leverage") {
    proj.timecourses.col(1) = proj.timecourses.col(0);
    proj.selected = {0, 1};
    CHECK(scrub::leverage(proj).sum() == Catch::Approx(1.0).margin(1e-8));
  }

  SECTION("thresholding flags multiples of the median") {
    Vector t = Vector::Constant(10, 0.1);
    t[4] = 0.9;
    const auto d = scrub::threshold_leverage(t, 3.0);
    CHECK(d.n_flagged() == 1);
    CHECK(d.flags[4]);
    CHECK(d.median_metric == Catch::Approx(0.1));
    CHECK_THROWS_AS(scrub::threshold_leverage(t, 0.0), scrub::ScrubError);
  }
}

TEST_CASE("framewise displacement") {
  SECTION("translation step appears once at the step") {
    auto rp = make_rp(10);
    rp.values.col(0).tail(5).array() = 0.25;  // step at t = 5
    const Vector trace = scrub::fd(rp);
    CHECK(trace[5] == Catch::Approx(0.25));
    CHECK(trace.sum() == Catch::Approx(0.25));
    CHECK(trace[0] == 0.0);
  }

  SECTION("rotations scale by the 50 mm radius") {
    auto rp = make_rp(6);
    rp.values(3, 4) = 0.01;  // radians
    const Vector trace = scrub::fd(rp);
    CHECK(trace[3] == Catch::Approx(0.5));
    CHECK(trace[4] == Catch::Approx(0.5));
  }

  SECTION("lag-4 differences") {
    auto rp = make_rp(12);
    rp.values(6, 1) = 1.0;  // single-volume blip
    const Vector trace = scrub::fd(rp, 4);
    CHECK(trace[6] == Catch::Approx(1.0));
    CHECK(trace[10] == Catch::Approx(1.0));
    CHECK(trace[7] == 0.0);
    CHECK_THROWS_AS(scrub::fd(rp, 0), scrub::ScrubError);
    CHECK_THROWS_AS(scrub::fd(rp, 12), scrub::ScrubError);
  }

  SECTION("threshold_fd flags strictly above the cutoff") {
    Vector t(4);
    t << 0.1, 0.3, 0.31, 0.0;
    const auto d = scrub::threshold_fd(t, 0.3);
    CHECK(d.n_flagged() == 1);
    CHECK(d.flags[2]);
    CHECK(d.method == scrub::ScrubMethod::fd);
  }
}

TEST_CASE("notch filter design") {
  const double tr = 0.72;
  const auto butter =
      scrub::design_notch(scrub::FilterKind::butterworth10, {0.2, 0.5}, tr);
  const auto cheby =
      scrub::design_notch(scrub::FilterKind::chebyshev2_20db, {0.31, 0.43}, tr);

  SECTION("coefficient sanity and stability") {
    CHECK(butter.b.size() == 21);
    CHECK(butter.a.size() == 21);
    CHECK(cheby.b.size() == 9);
    CHECK(cheby.a.size() == 9);
    CHECK(butter.stable());
    CHECK(cheby.stable());
  }

  SECTION("passband and stopband gains") {
    CHECK(butter.gain_at(0.01, tr) > 0.99);
    CHECK(cheby.gain_at(0.01, tr) > 0.99);
    CHECK(butter.gain_at(0.35, tr) < 1e-4);     // >= 80 dB down mid-band
    CHECK(cheby.gain_at(0.35, tr) < 0.1);       // >= 20 dB down
    // frozen reference magnitude for the Chebyshev notch at 0.35 Hz
    CHECK(cheby.gain_at(0.35, tr) == Catch::Approx(0.0189).margin(0.002));
    CHECK(butter.gain_at(0.62, tr) > 0.9);      // recovers above the band
  }

  SECTION("identity filter and band validation") {
    const scrub::NotchFilter none;
    CHECK(none.is_identity());
    CHECK(none.gain_at(0.3, tr) == 1.0);
    CHECK_THROWS_AS(
        scrub::design_notch(scrub::FilterKind::butterworth10, {0.5, 0.2}, tr),
        scrub::ScrubError);
    CHECK_THROWS_AS(
        scrub::design_notch(scrub::FilterKind::butterworth10, {0.2, 0.8}, tr),
        scrub::ScrubError);
  }

  SECTION("filtfilt is zero phase and attenuates the notch band") {
    const Eigen::Index T = 400;
    Vector x(T), low(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      const double tt = static_cast<double>(t) * tr;
      low[t] = std::sin(2.0 * M_PI * 0.03 * tt);
      x[t] = low[t] + std::sin(2.0 * M_PI * 0.35 * tt);
    }
    const Vector y = scrub::filtfilt(cheby, x);
    // interior matches the low-frequency part: notch removed, no lag
    const auto mid = Eigen::seqN(50, T - 100);
    const double err = (y(mid) - low(mid)).cwiseAbs().maxCoeff();
    CHECK(err < 0.05);
    CHECK_THROWS_AS(scrub::filtfilt(cheby, Vector::Zero(10)), scrub::ScrubError);
  }
}

TEST_CASE("dual-cutoff DVARS") {
  scrub::Rng rng(31);
  const Eigen::Index T = 200, V = 150;

  SECTION("planted spike is flagged, neighbors mostly are not") {
    Matrix Y = rng.gaussian_matrix(T, V);
    Y.row(77).array() += 6.0;
    const auto d = scrub::dvars_dual(Y);
    CHECK(d.flags[77]);
    CHECK(d.flags[78]);  // the difference out of the spike is also large
    CHECK(d.n_flagged() <= 4);
    REQUIRE(d.metric_secondary.has_value());
    CHECK((*d.metric_secondary)[77] > 5.0);
  }

  SECTION("scale invariance of the flag set") {
    Matrix Y = rng.gaussian_matrix(T, V);
    Y.row(40).array() += 5.0;
    const auto a = scrub::dvars_dual(Y);
    const auto b = scrub::dvars_dual(Matrix(3.0 * Y));
    CHECK(a.flags == b.flags);
    CHECK((a.metric - b.metric).cwiseAbs().maxCoeff() < 1e-8);
  }

  SECTION("constant data produces no flags") {
    const auto d = scrub::dvars_dual(Matrix::Constant(20, 5, 3.0));
    CHECK(d.n_flagged() == 0);
  }

  SECTION("dual requirement: both cutoffs must fire") {
    // tiny spike: significant z but negligible percent excess
    Matrix Y = 0.01 * rng.gaussian_matrix(T, V);
    Y.array() += 100.0;  // large mean power inflates the denominator of pct
    Y.row(50).array() += 0.2;
    const auto d = scrub::dvars_dual(Y);
    const double zcut =
        scrub::normal_quantile(1.0 - 0.05 / static_cast<double>(T));
    CHECK(d.metric[50] > zcut);
    CHECK((*d.metric_secondary)[50] < 5.0);
    CHECK_FALSE(d.flags[50]);
  }
}

TEST_CASE("expand_flags dilation") {
  scrub::BoolVec flags(10, false);
  flags[4] = true;
  const auto out = scrub::expand_flags(flags, 1, 2);
  scrub::BoolVec want(10, false);
  want[3] = want[4] = want[5] = want[6] = true;
  CHECK(out == want);
  // clipped at the edges
  scrub::BoolVec edge(3, false);
  edge[0] = true;
  CHECK(scrub::expand_flags(edge, 5, 5) == scrub::BoolVec{true, true, true});
}

TEST_CASE("design assembly") {
  const Eigen::Index T = 60;
  scrub::Rng rng(41);

  SECTION("dct4 design: intercept plus four cosines") {
    scrub::DenoiseSpec spec;
    spec.strategy = scrub::DenoiseStrategy::dct4;
    const auto d = scrub::build_design(spec, T);
    REQUIRE(d.M() == 5);
    CHECK(d.column_labels[0] == "intercept");
    CHECK(d.column_labels[4] == "dct(4)");
    CHECK(d.rank == 5);
  }

  SECTION("mpp is intercept only") {
    scrub::DenoiseSpec spec;
    spec.strategy = scrub::DenoiseStrategy::mpp;
    spec.include_dct = false;
    CHECK(scrub::build_design(spec, T).M() == 1);
  }

  SECTION("cc2 + mp6 column census") {
    scrub::DenoiseSpec spec;
    spec.strategy = scrub::DenoiseStrategy::ccx_mp6;
    spec.x = 2;
    spec.noise_roi_sources["wm"] = rng.gaussian_matrix(T, 20);
    spec.noise_roi_sources["csf"] = rng.gaussian_matrix(T, 15);
    auto rp = make_rp(T);
    rp.values = rng.gaussian_matrix(T, 6);
    spec.rp = rp;
    const auto d = scrub::build_design(spec, T);
    // 1 intercept + 4 dct + 2x2 compcor + 6 rp
    CHECK(d.M() == 15);
    CHECK(d.rank == 15);
  }

  SECTION("36P expands 9P with derivatives and squares") {
    scrub::DenoiseSpec spec;
    spec.strategy = scrub::DenoiseStrategy::p36;
    spec.noise_roi_sources["wm"] = rng.gaussian_matrix(T, 8);
    spec.noise_roi_sources["csf"] = rng.gaussian_matrix(T, 8);
    auto rp = make_rp(T);
    rp.values = rng.gaussian_matrix(T, 6);
    spec.rp = rp;
    spec.global_signal = rng.gaussian_vector(T);
    const auto d = scrub::build_design(spec, T);
    CHECK(d.M() == 1 + 4 + 36);
  }

  SECTION("spike columns and saturation guard") {
    scrub::DenoiseSpec spec;
    spec.strategy = scrub::DenoiseStrategy::dct4;
    scrub::BoolVec flags(T, false);
    flags[3] = flags[10] = true;
    const auto d = scrub::build_design(spec, T, &flags);
    CHECK(d.M() == 7);
    CHECK(d.column_labels.back() == "spike(10)");

    scrub::BoolVec all(T, true);
    CHECK_THROWS_WITH(scrub::build_design(spec, T, &all),
                      Catch::Matchers::ContainsSubstring("saturates"));
  }

  SECTION("collinear columns recorded as dropped") {
    scrub::DenoiseSpec spec;
    spec.strategy = scrub::DenoiseStrategy::p2;
    Matrix roi = rng.gaussian_matrix(T, 4);
    roi.col(1) = roi.col(0);
    roi.col(2) = roi.col(0);
    roi.col(3) = roi.col(0);  // mean roi = roi.col(0)
    spec.noise_roi_sources["wm"] = roi;
    spec.noise_roi_sources["dup"] = roi;  // identical mean regressor
    const auto d = scrub::build_design(spec, T);
    CHECK(d.rank == d.M() - 1);
    CHECK(d.dropped_labels.size() == 1);
  }

  SECTION("acompcor components and rank guard") {
    Matrix roi = rng.gaussian_matrix(T, 3);
    const auto cols = scrub::acompcor_regressors({{"wm", roi}}, 2);
    REQUIRE(cols.size() == 2);
    CHECK(cols[0].first == "noise_pc(wm,1)");
    CHECK(std::abs(cols[0].second.norm() - 1.0) < 1e-10);
    CHECK(std::abs(cols[0].second.dot(cols[1].second)) < 1e-10);
    CHECK_THROWS_AS(scrub::acompcor_regressors({{"wm", roi}}, 4),
                    scrub::ScrubError);
  }

  SECTION("rp expansion orders") {
    auto rp = make_rp(T);
    rp.values = rng.gaussian_matrix(T, 6);
    CHECK(scrub::rp_expansion(rp, 6).size() == 6);
    const auto big = scrub::rp_expansion(rp, 24);
    CHECK(big.size() == 24);
    CHECK(big[6].first == "rp_derivative(1)");
    CHECK(big[6].second[0] == 0.0);
    CHECK(big[12].second[5] == Catch::Approx(rp.values(5, 0) * rp.values(5, 0)));
    CHECK_THROWS_AS(scrub::rp_expansion(rp, 12), scrub::ScrubError);
  }
}

TEST_CASE("regression residuals") {
  scrub::Rng rng(51);
  const Eigen::Index T = 80, V = 12;
  scrub::ScanMatrix scan;
  scan.values = rng.gaussian_matrix(T, V);
  scan.values.rowwise() += 5.0 * rng.gaussian_matrix(1, V).row(0);

  scrub::DenoiseSpec spec;
  spec.strategy = scrub::DenoiseStrategy::dct4;

  SECTION("residuals orthogonal to the design") {
    const auto design = scrub::build_design(spec, T);
    const auto res = scrub::regress(scan, design);
    const Matrix cross = design.values.transpose() * res.values;
    CHECK(cross.cwiseAbs().maxCoeff() < 1e-8);
  }

  SECTION("spike rows are exactly zero; censor path agrees elsewhere") {
    scrub::BoolVec flags(T, false);
    flags[7] = flags[8] = flags[40] = true;
    const auto design = scrub::build_design(spec, T, &flags);
    const auto spiked = scrub::regress(scan, design);
    for (auto t : {7, 8, 40})
      CHECK(spiked.values.row(t).cwiseAbs().maxCoeff() == 0.0);

    const auto base = scrub::build_design(spec, T);
    const auto censored = scrub::regress_censored(scan, base, flags);
    for (Eigen::Index t = 0; t < T; ++t) {
      if (flags[static_cast<std::size_t>(t)]) continue;
      CHECK((spiked.values.row(t) - censored.values.row(t)).cwiseAbs().maxCoeff() <
            1e-8);
    }
  }

  SECTION("preliminary_then_final wires the two passes") {
    scan.values.row(30).array() += 50.0;  // artifact volume
    const auto result = scrub::preliminary_then_final(
        scan, spec, [](const scrub::ScanMatrix& prelim) {
          return scrub::dvars_dual(prelim.values);
        });
    CHECK(result.decision.flags[30]);
    CHECK(result.residuals.values.row(30).cwiseAbs().maxCoeff() == 0.0);
    const auto base = scrub::build_design(spec, scan.T());
    CHECK(result.decision.flags.size() == static_cast<std::size_t>(scan.T()));
    CHECK(base.rank == 5);
  }
}
