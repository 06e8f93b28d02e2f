#include "trafficgp/synth.hpp"

#include <algorithm>
#include <cmath>

#include "trafficgp/rng.hpp"

namespace trafficgp {

void WaveScenario::validate() const {
  grid.validate();
  if (!(v_jam < v_free))
    throw DataError("scenario: v_jam must be below v_free");
  if (!(v_jam >= 0.0)) throw DataError("scenario: v_jam must be >= 0");
  for (const auto &b : bands) {
    if (!(b.width_s > 0.0)) throw DataError("scenario: band width must be > 0");
    if (b.wave_speed_kmh == 0.0)
      throw DataError("scenario: band wave speed must be nonzero");
  }
  if (noise_std < 0.0) throw DataError("scenario: noise std must be >= 0");
  if (!(min_headway_m > 0.0))
    throw DataError("scenario: min headway must be > 0");
}

WaveScenario default_scenario() {
  WaveScenario scn;
  scn.grid.ds = 3.0;
  scn.grid.dt = 5.0;
  scn.grid.S = 60;
  scn.grid.T = 120;
  scn.grid.L = 1;
  scn.v_free = 20.0;
  scn.v_jam = 4.0;
  WaveBand band;
  band.s0 = 90.0;  // mid segment
  band.t0 = 300.0; // mid window
  band.wave_speed_kmh = -15.0;
  band.width_s = 60.0;
  band.amplitude = 16.0;
  scn.bands.push_back(band);
  scn.noise_std = 0.5;
  return scn;
}

double scenario_speed(const WaveScenario &scn, double s, double t) {
  double dip = 0.0;
  for (const auto &b : scn.bands) {
    const double v_wave = b.wave_speed_kmh / 3.6; // m/s
    const double t_line = b.t0 + (s - b.s0) / v_wave;
    const double u = (t - t_line) / b.width_s;
    dip += b.amplitude * std::exp(-0.5 * u * u);
  }
  return std::clamp(scn.v_free - dip, scn.v_jam, scn.v_free);
}

SpeedField generate_field(const WaveScenario &scn) {
  scn.validate();
  SpeedField field(scn.grid);
  for (int l = 1; l <= scn.grid.L; ++l) {
    std::mt19937_64 rng(derive_seed(scn.noise_seed, l));
    for (int i = 0; i < scn.grid.S; ++i)
      for (int j = 0; j < scn.grid.T; ++j) {
        const double s = (i + 0.5) * scn.grid.ds;
        const double t = (j + 0.5) * scn.grid.dt;
        double v = scenario_speed(scn, s, t);
        if (scn.noise_std > 0.0) v += scn.noise_std * normal(rng);
        field.set(l, i, j, std::max(v, 0.0), 1);
      }
  }
  return field;
}

std::vector<TrajectoryPoint> generate_trajectories(const WaveScenario &scn,
                                                   int n_vehicles,
                                                   std::uint64_t seed) {
  scn.validate();
  if (n_vehicles < 1)
    throw DataError("generate_trajectories: need at least one vehicle");

  // noise-free cell speeds drive the motion; recorded speeds come from the
  // same (possibly noisy) field realization as generate_field
  WaveScenario clean = scn;
  clean.noise_std = 0.0;
  const SpeedField base = generate_field(clean);
  const SpeedField recorded = scn.noise_std > 0.0 ? generate_field(scn) : base;
  const auto &grid = scn.grid;
  const double s_end = grid.space_extent();
  const double t_end = grid.time_extent();

  const double step = 0.2; // integration step, seconds
  const int n_steps = static_cast<int>(std::ceil(t_end / step));
  const int sample_every = static_cast<int>(std::lround(1.0 / step));

  auto cell_speed = [&](int lane, double s, double t) {
    int i = grid.space_cell(s), j = grid.time_cell(t);
    if (i < 0) i = std::clamp(static_cast<int>(s / grid.ds), 0, grid.S - 1);
    if (j < 0) j = std::clamp(static_cast<int>(t / grid.dt), 0, grid.T - 1);
    return base.value(lane, i, j);
  };

  std::vector<TrajectoryPoint> points;
  int vehicle_counter = 0;
  for (int lane = 1; lane <= grid.L; ++lane) {
    const int nv = n_vehicles / grid.L +
                   (lane <= n_vehicles % grid.L ? 1 : 0);
    if (nv == 0) continue;
    std::mt19937_64 rng(derive_seed(seed, lane));
    std::vector<double> entries(nv);
    for (auto &e : entries) e = uniform(rng, 0.0, t_end);
    std::sort(entries.begin(), entries.end());

    // leader positions on the global fine grid, for no-crossing clamps
    std::vector<double> leader(n_steps + 1,
                               std::numeric_limits<double>::infinity());
    for (int v = 0; v < nv; ++v) {
      const std::string id = "veh" + std::to_string(++vehicle_counter);
      std::vector<double> own(n_steps + 1,
                              std::numeric_limits<double>::infinity());
      const int g0 = static_cast<int>(std::ceil(entries[v] / step));
      double s = 0.0;
      for (int g = g0; g <= n_steps; ++g) {
        const double t = g * step;
        if (t >= t_end || s >= s_end) break;
        own[g] = s;
        if (g % sample_every == 0) {
          const int ci = grid.space_cell(s), cj = grid.time_cell(t);
          if (ci >= 0 && cj >= 0) {
            TrajectoryPoint p;
            p.vehicle_id = id;
            p.lane = lane;
            p.t = t;
            p.s = s;
            p.speed = recorded.value(lane, ci, cj);
            points.push_back(std::move(p));
          }
        }
        const double v_here = cell_speed(lane, s, t);
        double s_next = s + v_here * step;
        if (g + 1 <= n_steps && std::isfinite(leader[g + 1]))
          s_next = std::min(s_next, leader[g + 1] - scn.min_headway_m);
        s = std::max(s_next, s + 1e-6); // keep strictly moving
      }
      leader = std::move(own);
    }
  }
  return points;
}

} // namespace trafficgp
