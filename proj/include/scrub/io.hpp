#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scrub/fc.hpp"
#include "scrub/metrics.hpp"
#include "scrub/types.hpp"

namespace scrub {

namespace io {

/// Write-to-temp-then-rename, so partially written files never appear
/// under the final name.
inline void atomic_write(const std::filesystem::path& path,
                         const std::string& contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ScrubError("cannot open for writing: " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ScrubError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Matrix files: CSV (rows = volumes) or "SCRB" little-endian binary with a
// 24-byte header {magic "SCRB", u32 T, u32 V, u32 reserved, f64 tr_seconds}.

constexpr char kMagic[4] = {'S', 'C', 'R', 'B'};

inline std::string matrix_to_binary(const Matrix& m, double tr_seconds) {
  std::string buf;
  const auto T = static_cast<std::uint32_t>(m.rows());
  const auto V = static_cast<std::uint32_t>(m.cols());
  const std::uint32_t reserved = 0;
  buf.append(kMagic, 4);
  buf.append(reinterpret_cast<const char*>(&T), 4);
  buf.append(reinterpret_cast<const char*>(&V), 4);
  buf.append(reinterpret_cast<const char*>(&reserved), 4);
  buf.append(reinterpret_cast<const char*>(&tr_seconds), 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      buf.append(reinterpret_cast<const char*>(&v), 8);
    }
  return buf;
}

inline std::string matrix_to_csv(const Matrix& m) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  return out.str();
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m,
                         double tr_seconds = 1.0) {
  if (path.extension() == ".csv")
    atomic_write(path, matrix_to_csv(m));
  else
    atomic_write(path, matrix_to_binary(m, tr_seconds));
}

struct LoadedMatrix {
  Matrix values;
  double tr_seconds = 1.0;  // CSV carries no TR; caller supplies it
  bool tr_from_file = false;
};

inline LoadedMatrix parse_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // tolerate a single header line
      throw ScrubError("csv: non-numeric cell after data rows began");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) throw ScrubError("csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || width == 0) throw ScrubError("csv: no data rows");
  LoadedMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return out;
}

inline LoadedMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScrubError("cannot open: " + path.string());
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::equal(magic, magic + 4, kMagic)) {
    std::uint32_t T = 0, V = 0, reserved = 0;
    double tr = 1.0;
    in.read(reinterpret_cast<char*>(&T), 4);
    in.read(reinterpret_cast<char*>(&V), 4);
    in.read(reinterpret_cast<char*>(&reserved), 4);
    in.read(reinterpret_cast<char*>(&tr), 8);
    if (!in) throw ScrubError("binary matrix: truncated header");
    LoadedMatrix out;
    out.tr_seconds = tr;
    out.tr_from_file = true;
    out.values.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(V));
    for (std::uint32_t i = 0; i < T; ++i)
      for (std::uint32_t j = 0; j < V; ++j) {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        if (!in) throw ScrubError("binary matrix: truncated payload");
        out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    return out;
  }
  // not the magic: reparse as CSV from the start
  in.clear();
  in.seekg(0);
  return parse_csv_matrix(in);
}

// ---------------------------------------------------------------------------
// JSON sidecars

inline nlohmann::json to_json(const ScrubDecision& d) {
  nlohmann::json j;
  j["method"] = to_string(d.method);
  j["median_metric"] = d.median_metric;
  j["threshold"] = {{"median_multiple", d.threshold_spec.median_multiple},
                    {"cutoff_mm", d.threshold_spec.cutoff_mm},
                    {"zdvars_alpha", d.threshold_spec.zdvars_alpha},
                    {"pct_cut", d.threshold_spec.pct_cut}};
  j["metric"] = std::vector<double>(d.metric.data(), d.metric.data() + d.metric.size());
  if (d.metric_secondary)
    j["metric_secondary"] = std::vector<double>(
        d.metric_secondary->data(),
        d.metric_secondary->data() + d.metric_secondary->size());
  j["flags"] = std::vector<int>();
  for (bool f : d.flags) j["flags"].push_back(f ? 1 : 0);
  j["n_flagged"] = d.n_flagged();
  return j;
}

inline BoolVec flags_from_json(const nlohmann::json& j) {
  BoolVec flags;
  for (const auto& v : j.at("flags")) flags.push_back(v.get<int>() != 0);
  return flags;
}

inline nlohmann::json to_json(const FcMatrix& m) {
  nlohmann::json j;
  j["subject_id"] = m.subject_id;
  j["session_id"] = m.session_id;
  j["run_id"] = m.run_id;
  j["n_volumes_used"] = m.n_volumes_used;
  j["constant_parcels"] = m.constant_parcels;
  j["P"] = m.P();
  j["z"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.P(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.P()));
    for (Eigen::Index c = 0; c < m.P(); ++c) row[static_cast<std::size_t>(c)] = m.z(i, c);
    j["z"].push_back(row);
  }
  return j;
}

inline FcMatrix fc_from_json(const nlohmann::json& j) {
  FcMatrix m;
  m.subject_id = j.value("subject_id", "");
  m.session_id = j.value("session_id", "");
  m.run_id = j.value("run_id", "");
  m.n_volumes_used = j.value("n_volumes_used", 0);
  const auto& z = j.at("z");
  const auto P = static_cast<Eigen::Index>(z.size());
  m.z.resize(P, P);
  for (Eigen::Index i = 0; i < P; ++i)
    for (Eigen::Index c = 0; c < P; ++c)
      m.z(i, c) = z[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  for (const auto& v : j.value("constant_parcels", std::vector<Eigen::Index>{}))
    m.constant_parcels.push_back(v);
  return m;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  atomic_write(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScrubError("cannot open: " + path.string());
  return nlohmann::json::parse(in);
}

/// One-flag-per-line CSV, "volume,flag" header.
inline std::string flags_to_csv(const BoolVec& flags) {
  std::ostringstream out;
  out << "volume,flag\n";
  for (std::size_t t = 0; t < flags.size(); ++t)
    out << t << ',' << (flags[t] ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace io

}  // namespace scrub
