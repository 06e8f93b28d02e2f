#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trafficgp/baseline_asm.hpp"
#include "trafficgp/grid.hpp"
#include "trafficgp/synth.hpp"

using namespace trafficgp;

namespace {

SpatioTemporalGrid asm_grid() {
  SpatioTemporalGrid g;
  g.ds = 3.0;
  g.dt = 5.0;
  g.S = 15;
  g.T = 20;
  return g;
}

ObservationSet one_obs(double i, double j, double v) {
  ObservationSet obs;
  obs.X.resize(1, 2);
  obs.X << i, j;
  obs.y.resize(1);
  obs.y << v;
  return obs;
}

} // namespace

TEST_CASE("single observation dominates its own cell") {
  const SpatioTemporalGrid grid = asm_grid();
  const AsmResult res = asm_estimate(one_obs(5.5, 7.5, 12.0), grid, {});
  CHECK(res.field.value(1, 5, 7) == doctest::Approx(12.0));
  // weights normalize: every cell carries the only observed speed
  for (int i = 0; i < grid.S; i += 4)
    for (int j = 0; j < grid.T; j += 4)
      CHECK(res.field.value(1, i, j) == doctest::Approx(12.0));
}

TEST_CASE("uniform observations give a uniform field") {
  const SpatioTemporalGrid grid = asm_grid();
  std::mt19937_64 rng(5);
  ObservationSet obs = oracles::random_obs(rng, 40, grid.S, grid.T);
  obs.y.setConstant(9.0);
  const AsmResult res = asm_estimate(obs, grid, {});
  for (int i = 0; i < grid.S; ++i)
    for (int j = 0; j < grid.T; ++j)
      CHECK(res.field.value(1, i, j) == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("output stays within the observed speed range") {
  const SpatioTemporalGrid grid = asm_grid();
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    ObservationSet obs = oracles::random_obs(rng, 60, grid.S, grid.T);
    obs.y = obs.y.array().abs() + 1.0;
    const double lo = obs.y.minCoeff(), hi = obs.y.maxCoeff();
    const AsmResult res = asm_estimate(obs, grid, {});
    for (int i = 0; i < grid.S; ++i)
      for (int j = 0; j < grid.T; ++j) {
        CHECK(res.field.value(1, i, j) >= lo - 1e-9);
        CHECK(res.field.value(1, i, j) <= hi + 1e-9);
      }
  }
}

TEST_CASE("equal wave speeds collapse the two regimes") {
  const SpatioTemporalGrid grid = asm_grid();
  std::mt19937_64 rng(9);
  ObservationSet obs = oracles::random_obs(rng, 30, grid.S, grid.T);
  obs.y = obs.y.array().abs() * 3.0 + 2.0;

  // with both characteristics equal the blend weight cannot matter
  const AsmResult low =
      asm_smooth(obs, grid, 15.0, 15.0, 0.0, 0.0, 1.0, 18.0);
  const AsmResult high =
      asm_smooth(obs, grid, 15.0, 15.0, 0.0, 0.0, 1000.0, 18.0);
  for (int i = 0; i < grid.S; ++i)
    for (int j = 0; j < grid.T; ++j)
      CHECK(low.field.value(1, i, j) ==
            doctest::Approx(high.field.value(1, i, j)).epsilon(1e-12));
}

TEST_CASE("a congestion band moving at the matched speed is reproduced") {
  WaveScenario scn = default_scenario();
  scn.noise_std = 0.0;
  const SpeedField truth = generate_field(scn);
  // dense observations: every cell of the truth
  const ObservationSet obs = field_to_observations(truth);

  AsmParams params;
  params.c_congestion_kmh = scn.bands[0].wave_speed_kmh;
  const AsmResult res = asm_estimate(obs, scn.grid, params);

  // for each time column, the argmin of the estimate tracks the truth's
  // argmin (the characteristic line) within one space cell
  int worst = 0;
  int checked = 0;
  for (int j = 0; j < scn.grid.T; ++j) {
    int truth_arg = 0, est_arg = 0;
    double truth_min = 1e9, est_min = 1e9;
    for (int i = 0; i < scn.grid.S; ++i) {
      if (truth.value(1, i, j) < truth_min) {
        truth_min = truth.value(1, i, j);
        truth_arg = i;
      }
      if (res.field.value(1, i, j) < est_min) {
        est_min = res.field.value(1, i, j);
        est_arg = i;
      }
    }
    // only where the band actually crosses the segment interior
    if (truth_min > scn.v_jam + 0.5) continue;
    if (truth_arg == 0 || truth_arg == scn.grid.S - 1) continue;
    worst = std::max(worst, std::abs(truth_arg - est_arg));
    ++checked;
  }
  REQUIRE(checked > 3);
  CHECK(worst <= 1);
}

TEST_CASE("fallback to the mean is flagged for unreachable cells") {
  // huge grid, single far-away observation, tiny widths: the far corner
  // underflows the weights
  SpatioTemporalGrid grid;
  grid.ds = 100.0;
  grid.dt = 100.0;
  grid.S = 40;
  grid.T = 40;
  const AsmResult res =
      asm_smooth(one_obs(0.5, 0.5, 10.0), grid, -15.0, 70.0, 0.5, 0.5, 54.0,
                 18.0);
  CHECK(res.fallback_cells > 0);
  CHECK(res.field.value(1, grid.S - 1, grid.T - 1) == doctest::Approx(10.0));
}

TEST_CASE("parameter validation") {
  AsmParams p;
  p.c_congestion_kmh = 5.0;
  CHECK_THROWS_AS(p.validate(), DataError);
  p = AsmParams{};
  p.c_free_kmh = -5.0;
  CHECK_THROWS_AS(p.validate(), DataError);
  p = AsmParams{};
  p.transition_kmh = 0.0;
  CHECK_THROWS_AS(p.validate(), DataError);

  const SpatioTemporalGrid grid = asm_grid();
  ObservationSet empty;
  empty.X.resize(0, 2);
  empty.y.resize(0);
  CHECK_THROWS_AS(asm_estimate(empty, grid, {}), DataError);
}

TEST_CASE("multi-lane observations are smoothed per lane") {
  SpatioTemporalGrid grid = asm_grid();
  grid.L = 2;
  ObservationSet obs;
  obs.X.resize(2, 2);
  obs.X << 2.5, 3.5, 9.5, 11.5;
  obs.y.resize(2);
  obs.y << 5.0, 25.0;
  obs.lane = {1, 2};
  const AsmResult res = asm_estimate(obs, grid, {});
  // each lane sees only its own observation
  CHECK(res.field.value(1, 2, 3) == doctest::Approx(5.0));
  CHECK(res.field.value(2, 9, 11) == doctest::Approx(25.0));
  CHECK(res.field.value(1, 9, 11) == doctest::Approx(5.0));
}
