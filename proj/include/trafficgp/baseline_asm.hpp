#pragma once

#include "trafficgp/types.hpp"

namespace trafficgp {

/// Adaptive-smoothing baseline parameters. Wave speeds and the crossover
/// logic are in km/h; smoothing widths default to 6*ds meters and 1.1*dt
/// seconds when left at zero.
struct AsmParams {
  double c_congestion_kmh = -15.0;
  double c_free_kmh = 70.0;
  double sigma_space_m = 0.0; // 0: use 6 * ds
  double tau_time_s = 0.0;    // 0: use 1.1 * dt
  double crossover_kmh = 54.0;
  double transition_kmh = 18.0;

  void validate() const;
};

struct AsmResult {
  SpeedField field;           // fully populated estimate
  std::size_t fallback_cells; // cells that fell back to the global mean
};

/// Two-regime anisotropic kernel smoother: exponential weights along the
/// congestion and free-flow characteristics, blended by a tanh switch on
/// the lower of the two regime estimates.
AsmResult asm_estimate(const ObservationSet &obs,
                       const SpatioTemporalGrid &grid,
                       const AsmParams &params);

/// Smoother core without the sign restrictions on the wave speeds (the two
/// regimes may coincide, collapsing the blend). Speeds must be nonzero.
AsmResult asm_smooth(const ObservationSet &obs,
                     const SpatioTemporalGrid &grid, double c1_kmh,
                     double c2_kmh, double sigma_space_m, double tau_time_s,
                     double crossover_kmh, double transition_kmh);

} // namespace trafficgp
