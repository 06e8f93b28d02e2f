#include "trafficgp/commands.hpp"

#include <cstdio>
#include <filesystem>

#include "trafficgp/eval.hpp"
#include "trafficgp/multilane.hpp"
#include "trafficgp/sha256.hpp"

namespace trafficgp {

namespace fs = std::filesystem;

namespace {

std::string out_path(const RunConfig &cfg, const std::string &name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

void write_manifest(const RunConfig &cfg, const std::string &command,
                    const std::vector<std::string> &outputs) {
  Json manifest{{"command", command},
                {"config_digest", sha256_hex(cfg.raw.dump())},
                {"seed", cfg.seed},
                {"threads", cfg.threads},
                {"outputs", outputs},
                {"version", "0.1.0"}};
  save_json_file(manifest, out_path(cfg, "manifest.json"));
}

SpatioTemporalGrid require_grid(const RunConfig &cfg) {
  if (cfg.scenario.has_value() && !cfg.grid.has_value())
    return cfg.scenario->grid;
  if (!cfg.grid.has_value())
    throw ConfigError("/data/grid: required for this command");
  return *cfg.grid;
}

/// Load points from the trajectory CSV, or synthesize them when only a
/// scenario is configured.
std::vector<TrajectoryPoint> load_points(const RunConfig &cfg,
                                         const SpatioTemporalGrid &grid) {
  if (cfg.trajectories.has_value()) {
    IngestResult res =
        ingest_trajectories_file(*cfg.trajectories, cfg.schema, grid);
    if (res.dropped_outside > 0)
      std::fprintf(stderr, "ingest: dropped %zu rows outside the window\n",
                   res.dropped_outside);
    return std::move(res.points);
  }
  if (cfg.scenario.has_value())
    return generate_trajectories(*cfg.scenario, cfg.n_vehicles, cfg.seed);
  throw ConfigError("/data/trajectories: required (or provide /synth)");
}

struct Prepared {
  SpeedField observed; // after optional penetration sampling
  ObservationSet train;
};

Prepared prepare_training(const RunConfig &cfg,
                          const std::vector<TrajectoryPoint> &points,
                          const SpatioTemporalGrid &grid) {
  Prepared prep;
  const std::vector<TrajectoryPoint> *used = &points;
  std::vector<TrajectoryPoint> sampled;
  if (cfg.penetration_rate.has_value()) {
    sampled = sample_penetration(points, *cfg.penetration_rate,
                                 cfg.penetration_seed)
                  .observed;
    used = &sampled;
  }
  prep.observed = aggregate_to_grid(*used, grid);
  prep.train =
      field_to_observations(prep.observed, cfg.lanes, cfg.physical_units);
  return prep;
}

TrainedModel fit_from_config(const RunConfig &cfg, const Prepared &prep,
                             const SpatioTemporalGrid &grid) {
  OptimizerConfig opt = cfg.optimizer;
  if (cfg.mode == "gp_ard") opt.optimize_angle = false;

  KernelSpec init = cfg.kernel.has_value()
                        ? *cfg.kernel
                        : default_init_spec(prep.train, grid);
  if (cfg.mode == "gp_ard") init.angle = 0.0;

  if (cfg.mode == "p_gp_rotated") {
    if (!cfg.kernel.has_value())
      throw ConfigError("/model/kernel: required for p_gp_rotated");
    return fit_pretrained(prep.train, grid, *cfg.kernel, cfg.seed,
                          cfg.coreg.has_value() ? &*cfg.coreg : nullptr, opt);
  }

  if (prep.train.has_lanes()) {
    MultiLaneProblem problem;
    problem.grid = grid;
    for (int l = 1; l <= grid.L; ++l) {
      ObservationSet lane_obs;
      try {
        lane_obs = field_to_observations(prep.observed, {l});
      } catch (const DataError &) {
        // lane without observations: empty set
        lane_obs.X.resize(0, 2);
        lane_obs.y.resize(0);
      }
      lane_obs.lane.clear();
      problem.lanes.push_back(std::move(lane_obs));
    }
    problem.coreg = cfg.coreg.has_value()
                        ? *cfg.coreg
                        : CoregionalizationSpec::identity(grid.L, grid.L);
    return fit_joint(problem, init, opt, cfg.seed);
  }
  return fit(prep.train, grid, init, opt, cfg.seed,
             cfg.coreg.has_value() ? &*cfg.coreg : nullptr);
}

} // namespace

void cmd_ingest(const RunConfig &cfg) {
  const SpatioTemporalGrid grid = require_grid(cfg);
  const auto points = load_points(cfg, grid);
  const SpeedField field = aggregate_to_grid(points, grid);
  write_speed_field_csv(field, out_path(cfg, "field.csv"));
  write_grid_sidecar(grid, out_path(cfg, "field_grid.json"));
  write_manifest(cfg, "ingest", {"field.csv", "field_grid.json"});
  std::printf("ingest: %zu points, %zu present cells\n", points.size(),
              field.present_cells());
}

void cmd_fit(const RunConfig &cfg) {
  const SpatioTemporalGrid grid = require_grid(cfg);
  const auto points = load_points(cfg, grid);
  const Prepared prep = prepare_training(cfg, points, grid);
  const TrainedModel model = fit_from_config(cfg, prep, grid);
  save_model(model, out_path(cfg, "model.json"));
  write_manifest(cfg, "fit", {"model.json"});
  const double angle = model.kernel.wrapped_angle();
  std::printf("fit: n=%ld  iterations=%d  elbo=%.6f  angle=%.6f rad\n",
              long(prep.train.n()), model.info.iterations,
              model.info.final_elbo, angle);
  try {
    std::printf("fit: implied wave speed %.2f km/h\n",
                wave_speed_from_angle(angle, grid.ds, grid.dt));
  } catch (const DataError &) {
    std::printf("fit: angle ~ 0, wave speed undefined\n");
  }
}

void cmd_predict(const RunConfig &cfg) {
  if (!cfg.model_file.has_value())
    throw ConfigError("/model/file: required for predict");
  const TrainedModel model = load_model(*cfg.model_file);
  const SpatioTemporalGrid grid =
      cfg.grid.has_value() ? *cfg.grid : model.grid;

  const JointPrediction pred = predict_joint(model, grid);
  std::vector<std::string> outputs;
  write_speed_field_csv(pred.estimate, out_path(cfg, "estimate.csv"));
  write_grid_sidecar(grid, out_path(cfg, "estimate_grid.json"));
  outputs.push_back("estimate.csv");
  outputs.push_back("estimate_grid.json");

  const auto sigma3 = uncertainty_field(model, grid, 3.0);
  for (int l = 1; l <= grid.L; ++l) {
    const std::string suffix = "_lane" + std::to_string(l) + ".csv";
    write_matrix_csv(pred.estimate.values[l - 1],
                     out_path(cfg, "estimate" + suffix));
    write_matrix_csv(sigma3[l - 1], out_path(cfg, "uncertainty3std" + suffix));
    outputs.push_back("estimate" + suffix);
    outputs.push_back("uncertainty3std" + suffix);
  }

  if (cfg.trajectories.has_value()) {
    const auto points = load_points(cfg, grid);
    const SpeedField truth = aggregate_to_grid(points, grid);
    for (int l = 1; l <= grid.L; ++l) {
      const std::string suffix = "_lane" + std::to_string(l) + ".csv";
      Eigen::MatrixXd residual = truth.values[l - 1] -
                                 pred.estimate.values[l - 1];
      write_matrix_csv(residual, out_path(cfg, "residual" + suffix));
      write_matrix_csv(residual.cwiseAbs(),
                       out_path(cfg, "abs_residual" + suffix));
      outputs.push_back("residual" + suffix);
      outputs.push_back("abs_residual" + suffix);
    }
  }
  write_manifest(cfg, "predict", outputs);
  std::printf("predict: %d lanes over %dx%d cells\n", grid.L, grid.S, grid.T);
}

void cmd_sweep(const RunConfig &cfg) {
  const SpatioTemporalGrid grid = require_grid(cfg);
  const auto points = load_points(cfg, grid);

  SweepConfig sweep;
  sweep.rates = cfg.sweep_rates;
  sweep.seeds = cfg.sweep_seeds;
  sweep.methods = cfg.sweep_methods;
  sweep.base_seed = cfg.seed;
  sweep.optimizer = cfg.optimizer;
  sweep.initial_kernel = cfg.kernel;
  sweep.pretrained_kernel = cfg.kernel;
  sweep.asm_params = cfg.asm_params;
  sweep.lanes = cfg.lanes;
  sweep.threads = cfg.threads;

  const ExperimentReport report = run_sweep(points, grid, sweep);
  write_report_csv(report, out_path(cfg, "report.csv"));
  save_json_file(report_aggregate_json(report),
                 out_path(cfg, "aggregate.json"));
  write_manifest(cfg, "sweep", {"report.csv", "aggregate.json"});

  std::size_t failed = 0;
  for (const auto &row : report.rows)
    if (row.status != "ok") ++failed;
  std::printf("sweep: %zu runs, %zu failed\n", report.rows.size(), failed);
}

void cmd_synth(const RunConfig &cfg) {
  if (!cfg.scenario.has_value())
    throw ConfigError("/synth: required for the synth command");
  const WaveScenario &scn = *cfg.scenario;
  const SpeedField truth = generate_field(scn);
  const auto points = generate_trajectories(scn, cfg.n_vehicles, cfg.seed);

  write_speed_field_csv(truth, out_path(cfg, "truth_field.csv"));
  write_grid_sidecar(scn.grid, out_path(cfg, "truth_grid.json"));
  write_trajectories_csv(points, out_path(cfg, "trajectories.csv"));
  save_json_file(scenario_to_json(scn), out_path(cfg, "scenario.json"));
  write_manifest(cfg, "synth",
                 {"truth_field.csv", "truth_grid.json", "trajectories.csv",
                  "scenario.json"});
  std::printf("synth: %zu trajectory points over %dx%d cells\n", points.size(),
              scn.grid.S, scn.grid.T);
}

} // namespace trafficgp
