#pragma once

#include <cstdint>
#include <vector>

#include "trafficgp/types.hpp"

namespace trafficgp {

/// One congestion band: a Gaussian speed dip across the characteristic line
/// s = s0 + (wave_speed/3.6) * (t - t0). Width is the Gaussian std of the
/// time offset from the line, in seconds.
struct WaveBand {
  double s0 = 0.0;            // meters
  double t0 = 0.0;            // seconds
  double wave_speed_kmh = -15.0;
  double width_s = 60.0;
  double amplitude = 16.0;    // m/s speed reduction at the band center
};

/// Synthetic traffic-wave scenario with a known wave angle, used as ground
/// truth where the real trajectory datasets are not available.
struct WaveScenario {
  SpatioTemporalGrid grid;
  double v_free = 20.0; // m/s
  double v_jam = 4.0;   // m/s
  std::vector<WaveBand> bands;
  double noise_std = 0.0; // observation noise, m/s
  std::uint64_t noise_seed = 0;
  double min_headway_m = 5.0;

  void validate() const;
};

/// Desk-scale default: 60 x 120 grid at 3 m / 5 s, one band at -15 km/h.
WaveScenario default_scenario();

/// Noise-free speed of the scenario at a physical point (lane-independent;
/// every lane shares the band structure).
double scenario_speed(const WaveScenario &scn, double s, double t);

/// Fully populated truth field (counts of 1 everywhere); per-lane noise
/// streams are derived from noise_seed.
SpeedField generate_field(const WaveScenario &scn);

/// Vehicles enter at Poisson times, move with the local (noise-free) field
/// speed without crossing, and report one sample per second. Recorded
/// speeds are the cell value plus observation noise.
std::vector<TrajectoryPoint> generate_trajectories(const WaveScenario &scn,
                                                   int n_vehicles,
                                                   std::uint64_t seed);

} // namespace trafficgp
