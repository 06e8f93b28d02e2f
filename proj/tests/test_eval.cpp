#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trafficgp/eval.hpp"
#include "trafficgp/grid.hpp"
#include "trafficgp/synth.hpp"

using namespace trafficgp;

namespace {

SpatioTemporalGrid eval_grid(int S = 6, int T = 8, int L = 1) {
  SpatioTemporalGrid g;
  g.S = S;
  g.T = T;
  g.L = L;
  return g;
}

SpeedField constant_field(const SpatioTemporalGrid &g, double v) {
  SpeedField f(g);
  for (int l = 1; l <= g.L; ++l)
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j) f.set(l, i, j, v, 1);
  return f;
}

} // namespace

TEST_CASE("composite field selects observed cells first") {
  const SpatioTemporalGrid g = eval_grid();
  const SpeedField estimate = constant_field(g, 10.0);

  SUBCASE("empty observed returns the estimate") {
    SpeedField observed(g);
    const SpeedField out = composite_field(estimate, observed);
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j) CHECK(out.value(1, i, j) == 10.0);
  }

  SUBCASE("fully observed returns the observations") {
    const SpeedField observed = constant_field(g, 4.0);
    const SpeedField out = composite_field(estimate, observed);
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j) CHECK(out.value(1, i, j) == 4.0);
  }

  SUBCASE("half and half") {
    SpeedField observed(g);
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j)
        if ((i + j) % 2 == 0) observed.set(1, i, j, 4.0, 2);
    const SpeedField out = composite_field(estimate, observed);
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j)
        CHECK(out.value(1, i, j) == ((i + j) % 2 == 0 ? 4.0 : 10.0));
  }

  SUBCASE("estimate must cover unobserved cells") {
    SpeedField sparse_estimate(g);
    sparse_estimate.set(1, 0, 0, 1.0, 1);
    SpeedField observed(g);
    observed.set(1, 0, 1, 2.0, 1);
    CHECK_THROWS_AS(composite_field(sparse_estimate, observed), DataError);
  }

  SUBCASE("observed cells are never changed") {
    SpeedField observed(g);
    observed.set(1, 2, 3, 7.5, 4);
    const SpeedField out = composite_field(estimate, observed);
    CHECK(out.value(1, 2, 3) == 7.5);
    CHECK(out.count(1, 2, 3) == 4);
  }
}

TEST_CASE("metric identities") {
  const SpatioTemporalGrid g = eval_grid();

  SUBCASE("perfect estimate scores zero") {
    const SpeedField truth = constant_field(g, 13.0);
    CHECK(mae(truth, truth) == 0.0);
    CHECK(rmse(truth, truth) == 0.0);
  }

  SUBCASE("constant offset") {
    const SpeedField truth = constant_field(g, 13.0);
    const SpeedField est = constant_field(g, 15.0);
    CHECK(mae(truth, est) == doctest::Approx(2.0));
    CHECK(rmse(truth, est) == doctest::Approx(2.0));
  }

  SUBCASE("two-cell hand fixture: errors +1 and -3") {
    SpatioTemporalGrid g2 = eval_grid(2, 1);
    SpeedField truth(g2), est(g2);
    truth.set(1, 0, 0, 10.0, 1);
    truth.set(1, 1, 0, 10.0, 1);
    est.set(1, 0, 0, 9.0, 1);
    est.set(1, 1, 0, 13.0, 1);
    CHECK(mae(truth, est) == doctest::Approx(2.0));
    CHECK(rmse(truth, est) == doctest::Approx(std::sqrt(5.0)));
  }

  SUBCASE("missing truth cells are excluded with a count") {
    SpeedField truth(g);
    truth.set(1, 0, 0, 10.0, 1);
    truth.set(1, 1, 1, 12.0, 1);
    const SpeedField est = constant_field(g, 11.0);
    const MetricResult r = metrics(truth, est);
    CHECK(r.evaluated_cells == 2);
    CHECK(r.excluded_cells == std::size_t(g.S * g.T - 2));
    CHECK(r.mae == doctest::Approx(1.0));
  }

  SUBCASE("no evaluable cells is an error") {
    SpeedField truth(g);
    const SpeedField est = constant_field(g, 1.0);
    CHECK_THROWS_AS(metrics(truth, est), DataError);
  }

  SUBCASE("rmse dominates mae on random field pairs") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 1000; ++rep) {
      SpatioTemporalGrid g2 = eval_grid(3, 3);
      SpeedField truth(g2), est(g2);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          truth.set(1, i, j, uniform(rng, 0, 30), 1);
          est.set(1, i, j, uniform(rng, 0, 30), 1);
        }
      const MetricResult r = metrics(truth, est);
      CHECK(r.rmse >= r.mae - 1e-12);
    }
  }

  SUBCASE("unobserved-only mode skips training cells") {
    SpeedField truth = constant_field(g, 10.0);
    SpeedField est = constant_field(g, 10.0);
    SpeedField observed(g);
    observed.set(1, 0, 0, 10.0, 1);
    est.values[0](0, 0) = 0.0; // a large error at the observed cell
    const MetricResult all = metrics(truth, est);
    const MetricResult holdout = metrics(truth, est, true, &observed);
    CHECK(all.mae > 0.0);
    CHECK(holdout.mae == doctest::Approx(0.0));
    CHECK(holdout.evaluated_cells == all.evaluated_cells - 1);
  }
}

TEST_CASE("wave speed conversion") {
  // values reported for the two datasets, at their grid resolutions
  CHECK(wave_speed_from_angle(0.108, 3.0, 5.0) ==
        doctest::Approx(-19.87).epsilon(0.005));
  CHECK(wave_speed_from_angle(0.160, 4.0, 5.0) ==
        doctest::Approx(-17.86).epsilon(0.005));

  // tan(pi/4) = 1 with ds = 1 m, dt = 3.6 s gives exactly -1 km/h
  CHECK(wave_speed_from_angle(3.141592653589793 / 4.0, 1.0, 3.6) ==
        doctest::Approx(-1.0).epsilon(1e-12));

  // pi-periodicity
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const double a = uniform(rng, 0.02, 1.5);
    CHECK(wave_speed_from_angle(a, 3, 5) ==
          doctest::Approx(wave_speed_from_angle(a + 3.141592653589793, 3, 5))
              .epsilon(1e-9));
  }

  CHECK_THROWS_AS(wave_speed_from_angle(0.0, 3, 5), DataError);
  CHECK_THROWS_AS(wave_speed_from_angle(3.141592653589793, 3, 5), DataError);
}

TEST_CASE("uncertainty maps scale with k and vanish at k=0") {
  WaveScenario scn = default_scenario();
  scn.grid.S = 16;
  scn.grid.T = 20;
  scn.noise_std = 0.4;
  const auto points = generate_trajectories(scn, 60, 3);
  const SpeedField observed = aggregate_to_grid(points, scn.grid);
  const ObservationSet train = field_to_observations(observed);

  OptimizerConfig cfg;
  cfg.max_iterations = 40;
  const TrainedModel model =
      fit(train, scn.grid, default_init_spec(train, scn.grid), cfg, 1);

  const auto k3 = uncertainty_field(model, scn.grid, 3.0);
  const auto k1 = uncertainty_field(model, scn.grid, 1.0);
  const auto k0 = uncertainty_field(model, scn.grid, 0.0);
  REQUIRE(k3.size() == 1);
  CHECK(k3[0].isApprox(3.0 * k1[0], 1e-12));
  CHECK(k0[0].maxCoeff() == 0.0);
  CHECK(k3[0].minCoeff() >= 0.0);
}

TEST_CASE("uncertainty grows inside an observation gap") {
  WaveScenario scn = default_scenario();
  scn.grid.S = 16;
  scn.grid.T = 40;
  scn.noise_std = 0.3;
  const auto points = generate_trajectories(scn, 120, 9);

  // mask a 100 s window: drop every sample with t in [60, 160)
  std::vector<TrajectoryPoint> masked;
  for (const auto &p : points)
    if (p.t < 60.0 || p.t >= 160.0) masked.push_back(p);

  const SpeedField full_obs = aggregate_to_grid(points, scn.grid);
  const SpeedField gap_obs = aggregate_to_grid(masked, scn.grid);

  OptimizerConfig cfg;
  cfg.max_iterations = 60;
  const ObservationSet train_gap = field_to_observations(gap_obs);
  const TrainedModel model_gap =
      fit(train_gap, scn.grid, default_init_spec(train_gap, scn.grid), cfg, 2);

  const auto sigma = uncertainty_field(model_gap, scn.grid, 3.0);
  // gap columns: t cells [12, 32); observed columns elsewhere
  double gap_mean = 0.0, obs_mean = 0.0;
  int gap_n = 0, obs_n = 0;
  for (int i = 0; i < scn.grid.S; ++i)
    for (int j = 0; j < scn.grid.T; ++j) {
      if (j >= 13 && j < 31) {
        gap_mean += sigma[0](i, j);
        ++gap_n;
      } else if (j <= 10 || j >= 33) {
        obs_mean += sigma[0](i, j);
        ++obs_n;
      }
    }
  gap_mean /= gap_n;
  obs_mean /= obs_n;
  CHECK(gap_mean > obs_mean);
}

TEST_CASE("sweep produces a full, reproducible report") {
  WaveScenario scn = default_scenario();
  scn.grid.S = 14;
  scn.grid.T = 18;
  scn.noise_std = 0.4;
  const auto points = generate_trajectories(scn, 80, 17);

  SweepConfig cfg;
  cfg.rates = {0.5};
  cfg.seeds = 2;
  cfg.methods = {Method::Asm};
  cfg.base_seed = 5;

  const ExperimentReport report = run_sweep(points, scn.grid, cfg);
  REQUIRE(report.rows.size() == 2);
  for (const auto &row : report.rows) {
    CHECK(row.status == "ok");
    CHECK(row.rmse >= row.mae);
    CHECK(row.mae > 0.0);
  }
  const auto aggs = report.aggregates();
  REQUIRE(aggs.size() == 1);
  CHECK(aggs[0].runs == 2);

  // reproducible modulo timing
  const ExperimentReport again = run_sweep(points, scn.grid, cfg);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(again.rows[i].mae == report.rows[i].mae);
    CHECK(again.rows[i].rmse == report.rows[i].rmse);
    CHECK(again.rows[i].status == report.rows[i].status);
  }

  // threads do not change results
  SweepConfig threaded = cfg;
  threaded.threads = 2;
  const ExperimentReport par = run_sweep(points, scn.grid, threaded);
  for (std::size_t i = 0; i < report.rows.size(); ++i)
    CHECK(par.rows[i].mae == report.rows[i].mae);
}

TEST_CASE("sweep records failures without aborting") {
  WaveScenario scn = default_scenario();
  scn.grid.S = 10;
  scn.grid.T = 10;
  const auto points = generate_trajectories(scn, 30, 2);

  SweepConfig cfg;
  cfg.rates = {0.5};
  cfg.seeds = 1;
  cfg.methods = {Method::PGpRotated, Method::Asm}; // P-GP lacks its kernel
  const ExperimentReport report = run_sweep(points, scn.grid, cfg);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].status != "ok");
  CHECK(std::isnan(report.rows[0].mae));
  CHECK(report.rows[1].status == "ok");
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::GpRotated, Method::GpArd, Method::PGpRotated,
                   Method::Asm})
    CHECK(method_from_string(method_to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("nope"), DataError);
}
