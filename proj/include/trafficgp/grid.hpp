#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trafficgp/types.hpp"

namespace trafficgp {

/// Column-name mapping for trajectory CSVs. Keys are the canonical names;
/// values are the column headers actually present in the file.
struct CsvSchema {
  std::string vehicle_id = "vehicle_id";
  std::string t = "t";
  std::string s = "s";
  std::string lane = "lane";
  std::string speed = "speed";
};

struct IngestResult {
  std::vector<TrajectoryPoint> points; // window-relative coordinates
  std::size_t dropped_outside = 0;     // rows outside the space/time window
};

/// Parse a trajectory CSV. Rows outside the grid window (including lanes
/// beyond grid.L) are dropped and counted; malformed rows (unparseable
/// fields, negative speed) raise a DataError naming the row.
IngestResult ingest_trajectories(std::istream &in, const CsvSchema &schema,
                                 const SpatioTemporalGrid &grid);
IngestResult ingest_trajectories_file(const std::string &path,
                                      const CsvSchema &schema,
                                      const SpatioTemporalGrid &grid);

/// Cell-mean aggregation: every cell holds the arithmetic mean of the
/// speeds of the samples that fall in it.
SpeedField aggregate_to_grid(const std::vector<TrajectoryPoint> &points,
                             const SpatioTemporalGrid &grid);

struct PenetrationSample {
  std::vector<TrajectoryPoint> observed;
  std::vector<TrajectoryPoint> held_out;
  std::vector<std::string> observed_vehicles;
};

/// Vehicle-level penetration sampling: ceil(rate * #vehicles) vehicle ids,
/// uniformly at random, all of their points observed. Deterministic per
/// seed; preserves input order within each part.
PenetrationSample sample_penetration(const std::vector<TrajectoryPoint> &points,
                                     double rate, std::uint64_t seed);

/// One observation per present cell, at the cell center (i+0.5, j+0.5) in
/// cell units. With `lane_filter` empty all lanes are taken; the lane
/// channel is attached only for multi-lane fields (grid.L > 1).
ObservationSet field_to_observations(const SpeedField &field,
                                     const std::set<int> &lane_filter = {},
                                     bool physical_units = false);

} // namespace trafficgp
