#pragma once

#include <Eigen/Dense>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace scrub {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolVec = std::vector<bool>;
using IndexSet = std::set<Eigen::Index>;

struct ScrubError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// T x V time-by-location data matrix. Rows are volumes, columns are
/// brain locations (or any spatial sampling).
struct ScanMatrix {
  Matrix values;
  double tr_seconds = 1.0;
  std::string subject_id;
  std::string session_id;
  std::string run_id;

  Eigen::Index T() const { return values.rows(); }
  Eigen::Index V() const { return values.cols(); }

  void validate() const {
    if (T() < 2) throw ScrubError("ScanMatrix: need at least 2 volumes");
    if (V() < 1) throw ScrubError("ScanMatrix: need at least 1 location");
    if (!(tr_seconds > 0)) throw ScrubError("ScanMatrix: tr_seconds must be positive");
    if (!values.allFinite()) throw ScrubError("ScanMatrix: non-finite entries");
  }
};

/// T x 6 rigid-body motion trace: columns 0-2 translations in mm,
/// columns 3-5 rotations in radians.
struct RealignmentParams {
  Matrix values;
  double tr_seconds = 1.0;

  Eigen::Index T() const { return values.rows(); }

  void validate() const {
    if (values.cols() != 6) throw ScrubError("RealignmentParams: expected 6 columns");
    if (!values.allFinite()) throw ScrubError("RealignmentParams: non-finite entries");
    if (!(tr_seconds > 0)) throw ScrubError("RealignmentParams: tr_seconds must be positive");
  }
};

/// Unit-normalized type-II discrete cosine columns.
struct DctBasis {
  Matrix values;  // T x K
  Eigen::Index K() const { return values.cols(); }
};

/// Result of robustly centering/scaling each column of a scan.
/// Zero-variance columns are removed and their original indices recorded,
/// so spatial maps can be re-expanded with zeros.
struct StandardizedScan {
  Matrix values;                 // T x V_retained
  Vector center;                 // per retained column
  Vector scale;                  // per retained column, > 0
  std::vector<Eigen::Index> dropped_columns;
  double tr_seconds = 1.0;

  Eigen::Index T() const { return values.rows(); }
  Eigen::Index V() const { return values.cols(); }
};

}  // namespace scrub
