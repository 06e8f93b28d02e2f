#pragma once

#include <cstdint>
#include <vector>

#include "trafficgp/types.hpp"
#include "trafficgp/vsgp.hpp"

namespace trafficgp {

/// Heterotopic multi-lane estimation problem: one observation set per lane
/// (each without a lane channel), a shared grid, and a coregionalization
/// spec over the lanes.
struct MultiLaneProblem {
  SpatioTemporalGrid grid;
  std::vector<ObservationSet> lanes; // index l-1
  CoregionalizationSpec coreg;

  void validate() const;
};

/// Concatenate per-lane observations into the extended input space,
/// lane-major and input-ordered within a lane.
ObservationSet stack_heterotopic(const MultiLaneProblem &problem);

/// Joint VSGP fit over (location, lane) with the ICM kernel. Inducing
/// points carry lane indices, allocated proportionally to per-lane counts.
TrainedModel fit_joint(const MultiLaneProblem &problem, const KernelSpec &init,
                       const OptimizerConfig &config, std::uint64_t seed);

struct JointPrediction {
  SpeedField estimate; // fully populated, all lanes
  SpeedField variance; // predictive y-variance per cell
};

/// Estimate + variance over every grid cell, one output dimension per lane.
/// The grid's lane count must match the model's coregionalization outputs
/// (or be 1 for a single-output model).
JointPrediction predict_joint(const TrainedModel &model,
                              const SpatioTemporalGrid &grid);

} // namespace trafficgp
