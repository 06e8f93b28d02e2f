#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "trafficgp/common.hpp"

namespace trafficgp {

/// One trajectory sample. Coordinates are window-relative: t in seconds from
/// the start of the analysis window, s in meters from the segment start.
struct TrajectoryPoint {
  std::string vehicle_id;
  double t = 0.0;
  double s = 0.0;
  int lane = 1;
  double speed = 0.0; // m/s
};

/// Discretization of a road segment x time window (x lanes) into cells.
/// Cell (i, j) covers [i*ds, (i+1)*ds) x [j*dt, (j+1)*dt) relative to the
/// physical origins.
struct SpatioTemporalGrid {
  double ds = 3.0;  // cell length, meters
  double dt = 5.0;  // cell duration, seconds
  int S = 1;        // space cells
  int T = 1;        // time cells
  int L = 1;        // lanes
  double s_origin = 0.0;
  double t_origin = 0.0;

  void validate() const {
    if (!(ds > 0.0) || !(dt > 0.0))
      throw DataError("grid: ds and dt must be positive");
    if (S < 1 || T < 1 || L < 1)
      throw DataError("grid: S, T, L must be >= 1");
  }

  double space_extent() const { return S * ds; }
  double time_extent() const { return T * dt; }

  /// Cell index of a window-relative coordinate, or -1 if outside.
  int space_cell(double s) const {
    if (s < 0.0 || s >= space_extent()) return -1;
    int i = static_cast<int>(std::floor(s / ds));
    return i >= S ? -1 : i;
  }
  int time_cell(double t) const {
    if (t < 0.0 || t >= time_extent()) return -1;
    int j = static_cast<int>(std::floor(t / dt));
    return j >= T ? -1 : j;
  }
};

/// Per-cell mean speeds with observation counts. A cell is missing iff its
/// count is zero; missing values are stored as NaN.
struct SpeedField {
  SpatioTemporalGrid grid;
  std::vector<Eigen::MatrixXd> values; // per lane, S x T
  std::vector<Eigen::MatrixXi> counts; // per lane, S x T

  SpeedField() = default;
  explicit SpeedField(const SpatioTemporalGrid &g) : grid(g) {
    g.validate();
    values.assign(g.L, Eigen::MatrixXd::Constant(
                           g.S, g.T, std::numeric_limits<double>::quiet_NaN()));
    counts.assign(g.L, Eigen::MatrixXi::Zero(g.S, g.T));
  }

  bool present(int lane, int i, int j) const {
    return counts[lane - 1](i, j) > 0;
  }
  double value(int lane, int i, int j) const { return values[lane - 1](i, j); }
  int count(int lane, int i, int j) const { return counts[lane - 1](i, j); }

  void set(int lane, int i, int j, double v, int c) {
    values[lane - 1](i, j) = v;
    counts[lane - 1](i, j) = c;
  }

  std::size_t present_cells() const {
    std::size_t n = 0;
    for (const auto &c : counts) n += (c.array() > 0).count();
    return n;
  }
};

/// Flattened training/query set. X rows are (space, time) in cell units;
/// lane is empty for single-output problems, else one 1-based index per row.
struct ObservationSet {
  Eigen::MatrixX2d X;
  Eigen::VectorXd y;
  std::vector<int> lane;

  Eigen::Index n() const { return X.rows(); }
  bool has_lanes() const { return !lane.empty(); }
};

} // namespace trafficgp
