// Command-line front end: simulate | scrub | denoise | fc | evaluate | render

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "scrub/scrub.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

scrub::ScanMatrix load_scan(const fs::path& path, std::optional<double> tr_flag) {
  auto m = scrub::io::read_matrix(path);
  scrub::ScanMatrix scan;
  scan.values = std::move(m.values);
  scan.tr_seconds = tr_flag ? *tr_flag : m.tr_seconds;
  scan.validate();
  return scan;
}

scrub::RealignmentParams load_rp(const fs::path& path, double tr) {
  auto m = scrub::io::read_matrix(path);
  scrub::RealignmentParams rp;
  rp.values = std::move(m.values);
  rp.tr_seconds = tr;
  rp.validate();
  return rp;
}

scrub::BoolVec load_flags(const fs::path& path) {
  if (path.extension() == ".json")
    return scrub::io::flags_from_json(scrub::io::read_json(path));
  auto m = scrub::io::read_matrix(path);
  scrub::BoolVec flags;
  const auto col = m.values.cols() - 1;  // "volume,flag" or a bare column
  for (Eigen::Index t = 0; t < m.values.rows(); ++t)
    flags.push_back(m.values(t, col) != 0.0);
  return flags;
}

scrub::Parcellation load_parcellation(const fs::path& path) {
  auto m = scrub::io::read_matrix(path);
  scrub::Parcellation parc;
  for (Eigen::Index v = 0; v < m.values.rows(); ++v)
    parc.assignment.push_back(static_cast<Eigen::Index>(m.values(v, 0)));
  return parc;
}

std::array<double, 2> parse_band(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw CliError("--band-hz expects LO,HI");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CliError("--band-hz expects LO,HI");
  }
}

scrub::DenoiseSpec parse_denoise(const std::string& name,
                                 const std::vector<std::string>& roi_paths,
                                 std::optional<scrub::RealignmentParams> rp) {
  scrub::DenoiseSpec spec;
  std::string base = name;
  if (name == "mpp") {
    spec.strategy = scrub::DenoiseStrategy::mpp;
    spec.include_dct = false;
  } else if (name == "dct4") {
    spec.strategy = scrub::DenoiseStrategy::dct4;
  } else if (name == "p2") {
    spec.strategy = scrub::DenoiseStrategy::p2;
  } else if (name == "p9") {
    spec.strategy = scrub::DenoiseStrategy::p9;
  } else if (name == "p36") {
    spec.strategy = scrub::DenoiseStrategy::p36;
  } else if (name.rfind("cc", 0) == 0) {
    std::string rest = name.substr(2);
    std::size_t pos = 0;
    int x = 0;
    try {
      x = std::stoi(rest, &pos);
    } catch (const std::exception&) {
      throw CliError("unknown --denoise strategy: " + name);
    }
    spec.x = x;
    const std::string suffix = rest.substr(pos);
    if (suffix.empty())
      spec.strategy = scrub::DenoiseStrategy::ccx;
    else if (suffix == "mp6")
      spec.strategy = scrub::DenoiseStrategy::ccx_mp6;
    else if (suffix == "mp24")
      spec.strategy = scrub::DenoiseStrategy::ccx_mp24;
    else
      throw CliError("unknown --denoise strategy: " + name);
  } else {
    throw CliError("unknown --denoise strategy: " + name);
  }
  for (const auto& p : roi_paths) {
    const fs::path path(p);
    spec.noise_roi_sources[path.stem().string()] =
        scrub::io::read_matrix(path).values;
  }
  spec.rp = std::move(rp);
  return spec;
}

json run_config_json(const std::map<std::string, json>& kv) {
  json j;
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

// ---------------------------------------------------------------------------

struct ScrubArgs {
  std::string input, rp_path, method = "ica", filter = "auto", band = "";
  std::string denoise = "dct4";
  std::vector<std::string> noise_rois;
  double leverage_multiple = 3.0, cutoff_mm = -1.0, variance_fraction = 0.5;
  double kappa = 1.0, alpha = 0.05, pct_cut = 5.0;
  long lag = -1, fixed_q = 0;
  std::uint64_t seed = 0;
  std::optional<double> tr;
  std::string out = ".";
  bool strict = false;
};

scrub::ScrubDecision compute_scrub(const ScrubArgs& a) {
  const fs::path out_dir(a.out);

  if (a.method == "fd" || a.method == "modfd") {
    if (a.rp_path.empty()) throw scrub::ScrubError("method requires --rp");
    double tr = a.tr ? *a.tr : 1.0;
    if (!a.tr && !a.input.empty()) tr = load_scan(a.input, std::nullopt).tr_seconds;
    auto rp = load_rp(a.rp_path, tr);

    const bool modfd = a.method == "modfd";
    const long lag = a.lag > 0 ? a.lag : (modfd ? 4 : 1);
    std::string filter_name = a.filter;
    if (filter_name == "auto") filter_name = modfd ? "chebyshev2" : "none";
    std::array<double, 2> band =
        a.band.empty() ? std::array<double, 2>{modfd ? 0.31 : 0.2, modfd ? 0.43 : 0.5}
                       : parse_band(a.band);
    scrub::NotchFilter filter;
    if (filter_name == "butterworth10")
      filter = scrub::design_notch(scrub::FilterKind::butterworth10, band, rp.tr_seconds);
    else if (filter_name == "chebyshev2")
      filter = scrub::design_notch(scrub::FilterKind::chebyshev2_20db, band, rp.tr_seconds);
    else if (filter_name != "none")
      throw CliError("unknown --filter: " + filter_name);

    const double cutoff = a.cutoff_mm > 0 ? a.cutoff_mm : (modfd ? 0.2 : 0.3);
    const scrub::Vector trace = scrub::fd(rp, lag, filter);
    return scrub::threshold_fd(trace, cutoff,
                               modfd ? scrub::ScrubMethod::modfd : scrub::ScrubMethod::fd);
  }

  if (a.input.empty()) throw scrub::ScrubError("method requires --input");
  auto scan = load_scan(a.input, a.tr);
  std::optional<scrub::RealignmentParams> rp;
  if (!a.rp_path.empty()) rp = load_rp(a.rp_path, scan.tr_seconds);

  // preliminary denoise (no spikes) before metric computation
  auto spec = parse_denoise(a.denoise, a.noise_rois, rp);
  const auto design = scrub::build_design(spec, scan.T());
  const auto prelim = scrub::regress(scan, design);

  if (a.method == "dvars")
    return scrub::dvars_dual(prelim.values, a.alpha, a.pct_cut);

  scrub::ProjectionMethod pm;
  if (a.method == "pca")
    pm = scrub::ProjectionMethod::pca;
  else if (a.method == "ica")
    pm = scrub::ProjectionMethod::ica;
  else if (a.method == "fusedpca")
    pm = scrub::ProjectionMethod::fusedpca;
  else
    throw CliError("unknown --method: " + a.method);

  const auto std_scan = scrub::robust_standardize(prelim);
  const Eigen::Index Q =
      a.fixed_q > 0
          ? scrub::select_dimension(std_scan, scrub::FixedDimension{a.fixed_q})
          : scrub::select_dimension(std_scan,
                                    scrub::VarianceFraction{a.variance_fraction});
  scrub::ProjectionResult proj;
  switch (pm) {
    case scrub::ProjectionMethod::pca:
      proj = scrub::pca_project(std_scan, Q);
      break;
    case scrub::ProjectionMethod::ica:
      proj = scrub::ica_project(std_scan, Q, a.seed);
      break;
    case scrub::ProjectionMethod::fusedpca: {
      scrub::FusedPcaOptions opt;
      opt.kappa = a.kappa;
      proj = scrub::fusedpca_project(std_scan, Q, opt);
      break;
    }
  }
  if (a.strict && !proj.converged)
    throw std::runtime_error("projection did not converge (--strict)");
  const auto null = scrub::kurtosis_null_p99(std_scan.T(), 100000, a.seed);
  proj = scrub::select_artifact_components(proj, null);
  return scrub::threshold_leverage(scrub::leverage(proj), a.leverage_multiple);
}

int cmd_scrub(const ScrubArgs& a) {
  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  const auto decision = compute_scrub(a);
  auto j = scrub::io::to_json(decision);
  j["config"] = run_config_json({{"method", a.method},
                                 {"denoise", a.denoise},
                                 {"seed", a.seed},
                                 {"leverage_multiple", a.leverage_multiple}});
  scrub::io::write_json(out_dir / "decision.json", j);
  scrub::io::atomic_write(out_dir / "flags.csv", scrub::io::flags_to_csv(decision.flags));
  std::cout << "flagged " << decision.n_flagged() << " of " << decision.flags.size()
            << " volumes (" << scrub::to_string(decision.method) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_denoise(const std::string& input, const std::string& rp_path,
                const std::string& flags_path, const std::string& strategy,
                const std::vector<std::string>& noise_rois,
                std::optional<double> tr, const std::string& out) {
  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  auto scan = load_scan(input, tr);
  std::optional<scrub::RealignmentParams> rp;
  if (!rp_path.empty()) rp = load_rp(rp_path, scan.tr_seconds);
  auto spec = parse_denoise(strategy, noise_rois, rp);

  std::optional<scrub::BoolVec> flags;
  if (!flags_path.empty()) {
    flags = load_flags(flags_path);
    if (static_cast<Eigen::Index>(flags->size()) != scan.T())
      throw scrub::ScrubError("flags length does not match scan");
  }
  const auto design = scrub::build_design(spec, scan.T(), flags ? &*flags : nullptr);
  const auto residuals = scrub::regress(scan, design);

  scrub::io::write_matrix(out_dir / "residuals.scrb", residuals.values,
                          residuals.tr_seconds);
  std::ostringstream audit;
  audit << "column,label,dropped\n";
  for (std::size_t j = 0; j < design.column_labels.size(); ++j) {
    const auto& label = design.column_labels[j];
    const bool dropped = std::find(design.dropped_labels.begin(),
                                   design.dropped_labels.end(),
                                   label) != design.dropped_labels.end();
    audit << j << ',' << label << ',' << (dropped ? 1 : 0) << '\n';
  }
  scrub::io::atomic_write(out_dir / "design_audit.csv", audit.str());
  std::cout << "design rank " << design.rank << " / " << design.M() << " columns\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_fc(const std::string& input, const std::string& parc_path,
           const std::string& flags_path, std::optional<double> tr,
           const std::string& subject, const std::string& run,
           const std::string& out) {
  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  auto scan = load_scan(input, tr);
  scan.subject_id = subject;
  scan.run_id = run;
  auto parc = load_parcellation(parc_path);
  std::optional<scrub::BoolVec> flags;
  if (!flags_path.empty()) flags = load_flags(flags_path);
  const auto m = scrub::fc(scan, parc, flags ? &*flags : nullptr);
  scrub::io::write_json(out_dir / "fc.json", scrub::io::to_json(m));
  std::cout << "fc over " << m.n_volumes_used << " volumes, P = " << m.P() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, std::uint64_t seed_flag,
                 bool seed_given, const std::string& out) {
  scrub::SynthSpec spec;
  if (!config_path.empty()) {
    const auto cfg = scrub::Config::load(config_path);
    auto geti = [&](const char* k, Eigen::Index d) {
      auto v = cfg.get_number(k);
      return v ? static_cast<Eigen::Index>(*v) : d;
    };
    auto getd = [&](const char* k, double d) {
      auto v = cfg.get_number(k);
      return v ? *v : d;
    };
    spec.T = geti("synth.T", spec.T);
    spec.V = geti("synth.V", spec.V);
    spec.P = geti("synth.P", spec.P);
    spec.n_subjects = geti("synth.n_subjects", spec.n_subjects);
    spec.n_runs = geti("synth.n_runs", spec.n_runs);
    spec.tr_seconds = getd("synth.tr_seconds", spec.tr_seconds);
    spec.signal_rank = geti("synth.signal_rank", spec.signal_rank);
    spec.signal_amplitude = getd("synth.signal_amplitude", spec.signal_amplitude);
    spec.ar1_phi = getd("synth.ar1_phi", spec.ar1_phi);
    spec.drift_amplitude = getd("synth.drift_amplitude", spec.drift_amplitude);
    spec.n_bursts = geti("synth.n_bursts", spec.n_bursts);
    spec.burst_amplitude_sd = getd("synth.burst_amplitude_sd", spec.burst_amplitude_sd);
    spec.burst_density = getd("synth.burst_density", spec.burst_density);
    spec.resp_freq_hz = getd("synth.resp_freq_hz", spec.resp_freq_hz);
    spec.motion_coupling = getd("synth.motion_coupling", spec.motion_coupling);
    spec.motion_lag = geti("synth.motion_lag", spec.motion_lag);
    spec.seed = static_cast<std::uint64_t>(getd("synth.seed", 0.0));
  }
  if (seed_given) spec.seed = seed_flag;

  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  const auto data = scrub::generate(spec);

  json manifest;
  manifest["tr_seconds"] = spec.tr_seconds;
  manifest["n_subjects"] = spec.n_subjects;
  manifest["n_runs"] = spec.n_runs;
  manifest["seed"] = spec.seed;
  manifest["parcellation"] = "parcellation.csv";
  {
    std::ostringstream pcsv;
    for (auto a : data.parcellation.assignment) pcsv << a << '\n';
    scrub::io::atomic_write(out_dir / "parcellation.csv", pcsv.str());
  }
  manifest["true_fc"] = json::array();
  for (Eigen::Index s = 0; s < spec.n_subjects; ++s) {
    const std::string name = "true_fc_sub-" + std::to_string(s) + ".json";
    scrub::io::write_json(out_dir / name,
                          scrub::io::to_json(data.truth.true_fc[static_cast<std::size_t>(s)]));
    manifest["true_fc"].push_back(name);
  }
  manifest["runs"] = json::array();
  for (Eigen::Index s = 0; s < spec.n_subjects; ++s)
    for (Eigen::Index r = 0; r < spec.n_runs; ++r) {
      const auto idx = static_cast<std::size_t>(s * spec.n_runs + r);
      const std::string tag = std::to_string(s) + "_" + std::to_string(r);
      const std::string scan_name = "scan_" + tag + ".scrb";
      const std::string rp_name = "rp_" + tag + ".csv";
      scrub::io::write_matrix(out_dir / scan_name, data.scans[idx].values,
                              spec.tr_seconds);
      scrub::io::atomic_write(out_dir / rp_name,
                              scrub::io::matrix_to_csv(data.rps[idx].values));
      json run;
      run["subject"] = data.scans[idx].subject_id;
      run["run"] = data.scans[idx].run_id;
      run["scan"] = scan_name;
      run["rp"] = rp_name;
      run["burst_times"] = data.truth.burst_times[idx];
      manifest["runs"].push_back(run);
    }
  scrub::io::write_json(out_dir / "manifest.json", manifest);
  std::cout << "wrote " << manifest["runs"].size() << " runs to " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string& manifest_path, const std::string& flags_dir,
                 Eigen::Index mac_permutations, std::uint64_t seed,
                 double min_unflagged_frac, const std::string& out) {
  const fs::path manifest_file(manifest_path);
  const fs::path base = manifest_file.parent_path();
  const auto manifest = scrub::io::read_json(manifest_file);
  const fs::path out_dir(out);
  fs::create_directories(out_dir);

  const auto parc = load_parcellation(base / manifest.at("parcellation").get<std::string>());
  const double tr = manifest.value("tr_seconds", 1.0);
  const auto S = manifest.at("n_subjects").get<Eigen::Index>();
  const auto R = manifest.at("n_runs").get<Eigen::Index>();

  // per-(subject, run) FC with optional flags; nullopt marks excluded runs
  std::vector<std::vector<std::optional<scrub::FcMatrix>>> fcs(
      static_cast<std::size_t>(S));
  for (auto& v : fcs) v.resize(static_cast<std::size_t>(R));
  std::vector<std::vector<scrub::ScanMatrix>> scans(static_cast<std::size_t>(S));
  std::vector<std::vector<scrub::BoolVec>> all_flags(static_cast<std::size_t>(S));

  Eigen::Index run_index = 0;
  for (const auto& run : manifest.at("runs")) {
    const auto s = run_index / R;
    const auto r = run_index % R;
    ++run_index;
    auto scan = load_scan(base / run.at("scan").get<std::string>(), tr);
    scan.subject_id = run.at("subject").get<std::string>();
    scan.run_id = run.at("run").get<std::string>();

    scrub::BoolVec flags(static_cast<std::size_t>(scan.T()), false);
    if (!flags_dir.empty()) {
      const fs::path f = fs::path(flags_dir) /
                         ("flags_" + std::to_string(s) + "_" + std::to_string(r) + ".csv");
      if (fs::exists(f)) flags = load_flags(f);
    }
    const double unflagged =
        1.0 - static_cast<double>(std::count(flags.begin(), flags.end(), true)) /
                  static_cast<double>(flags.size());
    scans[static_cast<std::size_t>(s)].push_back(scan);
    all_flags[static_cast<std::size_t>(s)].push_back(flags);
    if (unflagged >= min_unflagged_frac)
      fcs[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)] =
          scrub::fc(scan, parc, &flags);
  }

  json metrics;
  metrics["config"] = {{"mac_permutations", mac_permutations},
                       {"seed", seed},
                       {"min_unflagged_frac", min_unflagged_frac}};

  // subjects with a complete set of runs enter ICC and fingerprinting
  std::vector<Eigen::Index> complete;
  for (Eigen::Index s = 0; s < S; ++s) {
    bool all = true;
    for (Eigen::Index r = 0; r < R; ++r)
      if (!fcs[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)]) all = false;
    if (all) complete.push_back(s);
  }
  metrics["n_subjects_used"] = complete.size();

  if (complete.size() >= 2 && R >= 2) {
    const auto P = fcs[static_cast<std::size_t>(complete[0])][0]->P();
    const auto n_pairs = scrub::FcMatrix::n_pairs(P);
    double icc_sum = 0.0;
    std::size_t icc_n = 0;
    std::vector<scrub::Vector> uppers;
    for (auto s : complete)
      for (Eigen::Index r = 0; r < R; ++r)
        uppers.push_back(
            fcs[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)]->upper());
    for (std::size_t pidx = 0; pidx < n_pairs; ++pidx) {
      scrub::Matrix z(static_cast<Eigen::Index>(complete.size()), R);
      for (std::size_t si = 0; si < complete.size(); ++si)
        for (Eigen::Index r = 0; r < R; ++r)
          z(static_cast<Eigen::Index>(si), r) =
              uppers[si * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)]
                    [static_cast<Eigen::Index>(pidx)];
      try {
        icc_sum += scrub::icc31(z);
        ++icc_n;
      } catch (const scrub::ScrubError&) {
        // degenerate pair: skip
      }
    }
    metrics["icc_mean"] = icc_n ? icc_sum / static_cast<double>(icc_n) : 0.0;
    metrics["icc_n_pairs"] = icc_n;

    std::vector<scrub::FcMatrix> first, second;
    for (auto s : complete) {
      first.push_back(*fcs[static_cast<std::size_t>(s)][0]);
      second.push_back(*fcs[static_cast<std::size_t>(s)][1]);
    }
    metrics["fingerprint"] = scrub::fingerprint_pooled(first, second);
  }

  if (manifest.contains("true_fc")) {
    std::vector<scrub::Vector> est, truth;
    for (auto s : complete) {
      const auto truth_fc = scrub::io::fc_from_json(scrub::io::read_json(
          base / manifest["true_fc"][static_cast<std::size_t>(s)].get<std::string>()));
      for (Eigen::Index r = 0; r < R; ++r) {
        est.push_back(
            fcs[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)]->upper());
        truth.push_back(truth_fc.upper());
      }
    }
    if (!est.empty()) metrics["rmse"] = scrub::rmse_validity(est, truth);
  }

  if (!flags_dir.empty() && mac_permutations > 0 && !complete.empty()) {
    std::vector<std::vector<scrub::Vector>> scrubbed;
    std::vector<std::vector<std::vector<scrub::Vector>>> randomized;
    for (auto s : complete) {
      std::vector<scrub::Vector> per_run;
      std::vector<std::vector<scrub::Vector>> per_run_rand;
      for (Eigen::Index r = 0; r < R; ++r) {
        const auto& scan = scans[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)];
        const auto& flags = all_flags[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)];
        per_run.push_back(
            fcs[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)]->upper());
        const auto n_censor = static_cast<Eigen::Index>(
            std::count(flags.begin(), flags.end(), true));
        std::vector<scrub::Vector> rand_fc;
        for (Eigen::Index q = 0; q < mac_permutations; ++q) {
          auto rng = scrub::Rng::derive(
              seed, static_cast<std::uint64_t>(s * R + r),
              static_cast<std::uint64_t>(q) + 1);
          const auto rflags = scrub::random_flags(scan.T(), n_censor, rng);
          rand_fc.push_back(scrub::fc(scan, parc, &rflags).upper());
        }
        per_run_rand.push_back(std::move(rand_fc));
      }
      scrubbed.push_back(std::move(per_run));
      randomized.push_back(std::move(per_run_rand));
    }
    metrics["mac"] = scrub::mac(scrubbed, randomized);
  }

  scrub::io::write_json(out_dir / "metrics.json", metrics);
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_render(const std::string& input, const std::string& decision_path,
               std::optional<double> tr, const std::string& out) {
  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  if (!input.empty()) {
    const auto scan = load_scan(input, tr);
    scrub::io::atomic_write(out_dir / "grayplot.pgm",
                            scrub::grayplot_pgm(scan.values));
  }
  if (!decision_path.empty()) {
    const auto j = scrub::io::read_json(decision_path);
    scrub::ScrubDecision d;
    const auto& metric = j.at("metric");
    d.metric.resize(static_cast<Eigen::Index>(metric.size()));
    for (std::size_t i = 0; i < metric.size(); ++i)
      d.metric[static_cast<Eigen::Index>(i)] = metric[i].get<double>();
    d.flags = scrub::io::flags_from_json(j);
    d.median_metric = j.value("median_metric", 0.0);
    const std::string method = j.value("method", "leverage");
    if (method == "fd") d.method = scrub::ScrubMethod::fd;
    else if (method == "modfd") d.method = scrub::ScrubMethod::modfd;
    else if (method == "dvars") d.method = scrub::ScrubMethod::dvars;
    if (j.contains("threshold")) {
      const auto& th = j["threshold"];
      d.threshold_spec.median_multiple = th.value("median_multiple", 0.0);
      d.threshold_spec.cutoff_mm = th.value("cutoff_mm", 0.0);
      d.threshold_spec.zdvars_alpha = th.value("zdvars_alpha", 0.0);
      d.threshold_spec.pct_cut = th.value("pct_cut", 0.0);
    }
    scrub::io::atomic_write(out_dir / "metric_trace.svg",
                            scrub::metric_trace_svg(d, method));
  }
  if (input.empty() && decision_path.empty())
    throw CliError("render: provide --input and/or --decision");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection scrubbing, motion scrubbing, and FC quality toolkit"};
  app.require_subcommand(1);

  // scrub
  ScrubArgs sa;
  auto* sc = app.add_subcommand("scrub", "Compute a scrubbing decision");
  sc->add_option("--input", sa.input, "Scan matrix (.csv or .scrb)");
  sc->add_option("--rp", sa.rp_path, "Realignment parameters (T x 6)");
  sc->add_option("--method", sa.method, "pca|ica|fusedpca|fd|modfd|dvars");
  sc->add_option("--leverage-multiple", sa.leverage_multiple, "Median multiple");
  sc->add_option("--cutoff-mm", sa.cutoff_mm, "FD cutoff in mm");
  sc->add_option("--lag", sa.lag, "FD lag in volumes");
  sc->add_option("--filter", sa.filter, "none|butterworth10|chebyshev2");
  sc->add_option("--band-hz", sa.band, "Notch band LO,HI in Hz");
  sc->add_option("--variance-fraction", sa.variance_fraction, "Dimension criterion");
  sc->add_option("--q", sa.fixed_q, "Fixed embedding dimension");
  sc->add_option("--kappa", sa.kappa, "FusedPCA TV penalty");
  sc->add_option("--alpha", sa.alpha, "DVARS family-wise level");
  sc->add_option("--pct-cut", sa.pct_cut, "Delta%DVARS cutoff");
  sc->add_option("--denoise", sa.denoise, "Preliminary denoise strategy");
  sc->add_option("--noise-roi", sa.noise_rois, "Noise ROI timeseries file(s)");
  sc->add_option("--seed", sa.seed, "RNG seed");
  double tr_flag = 0.0;
  auto* tr_opt = sc->add_option("--tr", tr_flag, "Sampling interval override (s)");
  sc->add_option("--out", sa.out, "Output directory");
  sc->add_flag("--strict", sa.strict, "Escalate non-convergence to an error");

  // denoise
  std::string dn_input, dn_rp, dn_flags, dn_strategy = "cc2mp6", dn_out = ".";
  std::vector<std::string> dn_rois;
  double dn_tr = 0.0;
  auto* dn = app.add_subcommand("denoise", "Nuisance regression");
  dn->add_option("--input", dn_input, "Scan matrix")->required();
  dn->add_option("--rp", dn_rp, "Realignment parameters");
  dn->add_option("--flags", dn_flags, "Flags file (csv or decision json)");
  dn->add_option("--denoise", dn_strategy, "Strategy");
  dn->add_option("--noise-roi", dn_rois, "Noise ROI timeseries file(s)");
  auto* dn_tr_opt = dn->add_option("--tr", dn_tr, "Sampling interval override (s)");
  dn->add_option("--out", dn_out, "Output directory");

  // fc
  std::string fc_input, fc_parc, fc_flags, fc_subject = "sub-0", fc_run = "run-0",
              fc_out = ".";
  double fc_tr = 0.0;
  auto* fcc = app.add_subcommand("fc", "Parcel functional connectivity");
  fcc->add_option("--input", fc_input, "Residual scan matrix")->required();
  fcc->add_option("--parcellation", fc_parc, "Parcel assignment csv")->required();
  fcc->add_option("--flags", fc_flags, "Flags file");
  fcc->add_option("--subject", fc_subject, "Subject label");
  fcc->add_option("--run", fc_run, "Run label");
  auto* fc_tr_opt = fcc->add_option("--tr", fc_tr, "Sampling interval override (s)");
  fcc->add_option("--out", fc_out, "Output directory");

  // simulate
  std::string sim_config, sim_out = ".";
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--config", sim_config, "SynthSpec config (toml or json)");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "Output directory");

  // evaluate
  std::string ev_manifest, ev_flags_dir, ev_out = ".";
  Eigen::Index ev_mac_q = 0;
  std::uint64_t ev_seed = 0;
  double ev_min_frac = 0.5;
  auto* ev = app.add_subcommand("evaluate", "FC quality metrics over a manifest");
  ev->add_option("--manifest", ev_manifest, "manifest.json from simulate")->required();
  ev->add_option("--flags-dir", ev_flags_dir, "Directory of flags_<s>_<r>.csv files");
  ev->add_option("--mac-permutations", ev_mac_q, "Random censorings per run for MAC");
  ev->add_option("--seed", ev_seed, "RNG seed for MAC permutations");
  ev->add_option("--min-unflagged-frac", ev_min_frac,
                 "Exclude runs with a smaller unflagged fraction");
  ev->add_option("--out", ev_out, "Output directory");

  // render
  std::string rn_input, rn_decision, rn_out = ".";
  double rn_tr = 0.0;
  auto* rn = app.add_subcommand("render", "Grayplot and metric trace images");
  rn->add_option("--input", rn_input, "Scan matrix for the grayplot");
  rn->add_option("--decision", rn_decision, "decision.json for the trace");
  auto* rn_tr_opt = rn->add_option("--tr", rn_tr, "Sampling interval override (s)");
  rn->add_option("--out", rn_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sc) {
      if (tr_opt->count()) sa.tr = tr_flag;
      return cmd_scrub(sa);
    }
    if (*dn)
      return cmd_denoise(dn_input, dn_rp, dn_flags, dn_strategy, dn_rois,
                         dn_tr_opt->count() ? std::optional<double>(dn_tr)
                                            : std::nullopt,
                         dn_out);
    if (*fcc)
      return cmd_fc(fc_input, fc_parc, fc_flags,
                    fc_tr_opt->count() ? std::optional<double>(fc_tr)
                                       : std::nullopt,
                    fc_subject, fc_run, fc_out);
    if (*sim) return cmd_simulate(sim_config, sim_seed, sim_seed_opt->count() > 0, sim_out);
    if (*ev)
      return cmd_evaluate(ev_manifest, ev_flags_dir, ev_mac_q, ev_seed,
                          ev_min_frac, ev_out);
    if (*rn)
      return cmd_render(rn_input, rn_decision,
                        rn_tr_opt->count() ? std::optional<double>(rn_tr)
                                           : std::nullopt,
                        rn_out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const scrub::ScrubError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
