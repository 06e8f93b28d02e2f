#include "trafficgp/baseline_asm.hpp"

#include <cmath>
#include <vector>

namespace trafficgp {

void AsmParams::validate() const {
  if (!(c_congestion_kmh < 0.0))
    throw DataError("asm: congestion wave speed must be negative");
  if (!(c_free_kmh > 0.0))
    throw DataError("asm: free-flow wave speed must be positive");
  if (sigma_space_m < 0.0 || tau_time_s < 0.0)
    throw DataError("asm: smoothing widths must be >= 0");
  if (!(transition_kmh > 0.0))
    throw DataError("asm: transition width must be > 0");
}

AsmResult asm_smooth(const ObservationSet &obs,
                     const SpatioTemporalGrid &grid, double c1_kmh,
                     double c2_kmh, double sigma_space_m, double tau_time_s,
                     double crossover_kmh, double transition_kmh) {
  grid.validate();
  if (obs.n() < 1) throw DataError("asm: empty observation set");
  if (c1_kmh == 0.0 || c2_kmh == 0.0)
    throw DataError("asm: wave speeds must be nonzero");

  const double sigma = sigma_space_m > 0.0 ? sigma_space_m : 6.0 * grid.ds;
  const double tau = tau_time_s > 0.0 ? tau_time_s : 1.1 * grid.dt;
  const double v1 = c1_kmh / 3.6; // m/s
  const double v2 = c2_kmh / 3.6;
  const double crossover = crossover_kmh / 3.6;
  const double transition = transition_kmh / 3.6;

  AsmResult result{SpeedField(grid), 0};

  const double global_mean = obs.y.mean();
  for (int lane = 1; lane <= grid.L; ++lane) {
    // observations of this lane, in physical units
    std::vector<double> so, to, yo;
    for (Eigen::Index k = 0; k < obs.n(); ++k) {
      const int l = obs.has_lanes() ? obs.lane[k] : 1;
      if (l != lane) continue;
      so.push_back(obs.X(k, 0) * grid.ds);
      to.push_back(obs.X(k, 1) * grid.dt);
      yo.push_back(obs.y(k));
    }
    double lane_mean = global_mean;
    if (!yo.empty()) {
      lane_mean = 0.0;
      for (double v : yo) lane_mean += v;
      lane_mean /= double(yo.size());
    }

    for (int i = 0; i < grid.S; ++i) {
      const double sc = (i + 0.5) * grid.ds;
      for (int j = 0; j < grid.T; ++j) {
        const double tc = (j + 0.5) * grid.dt;
        double w1 = 0.0, s1 = 0.0, w2 = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < yo.size(); ++k) {
          const double dsk = sc - so[k];
          const double dtk = tc - to[k];
          // time offset measured along each characteristic
          const double e1 = std::exp(-(std::abs(dsk) / sigma +
                                       std::abs(dtk - dsk / v1) / tau));
          const double e2 = std::exp(-(std::abs(dsk) / sigma +
                                       std::abs(dtk - dsk / v2) / tau));
          w1 += e1;
          s1 += e1 * yo[k];
          w2 += e2;
          s2 += e2 * yo[k];
        }
        double value;
        if (w1 < 1e-300 || w2 < 1e-300) {
          value = lane_mean;
          ++result.fallback_cells;
        } else {
          const double est1 = s1 / w1, est2 = s2 / w2;
          const double w = 0.5 * (1.0 + std::tanh((crossover -
                                                   std::min(est1, est2)) /
                                                  transition));
          value = w * est1 + (1.0 - w) * est2;
        }
        result.field.set(lane, i, j, value, 1);
      }
    }
  }
  return result;
}

AsmResult asm_estimate(const ObservationSet &obs,
                       const SpatioTemporalGrid &grid,
                       const AsmParams &params) {
  params.validate();
  return asm_smooth(obs, grid, params.c_congestion_kmh, params.c_free_kmh,
                    params.sigma_space_m, params.tau_time_s,
                    params.crossover_kmh, params.transition_kmh);
}

} // namespace trafficgp
