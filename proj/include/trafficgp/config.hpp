#pragma once

#include <optional>
#include <set>
#include <string>

#include "trafficgp/eval.hpp"
#include "trafficgp/grid.hpp"
#include "trafficgp/io.hpp"
#include "trafficgp/synth.hpp"

namespace trafficgp {

/// Parsed run configuration. Parsing is strict: unknown keys and invalid
/// values raise ConfigError with the JSON-pointer path of the offender.
struct RunConfig {
  // data
  std::optional<std::string> trajectories;
  CsvSchema schema;
  std::optional<SpatioTemporalGrid> grid;
  std::set<int> lanes;
  std::optional<double> penetration_rate;
  std::uint64_t penetration_seed = 0;

  // model
  std::string mode = "gp_rotated";
  std::optional<KernelSpec> kernel;
  std::optional<CoregionalizationSpec> coreg;
  std::optional<std::string> model_file;
  OptimizerConfig optimizer;
  bool physical_units = false;

  // baselines
  AsmParams asm_params;

  // sweep
  bool has_sweep = false;
  std::vector<double> sweep_rates{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  int sweep_seeds = 10;
  std::vector<Method> sweep_methods{Method::GpRotated, Method::GpArd,
                                    Method::Asm};

  // synth
  std::optional<WaveScenario> scenario;
  int n_vehicles = 500;

  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  Json raw; // parsed document, for the manifest digest
};

RunConfig parse_config(const Json &j);
RunConfig load_config(const std::string &path);

Json scenario_to_json(const WaveScenario &scn);
WaveScenario scenario_from_json(const Json &j, const std::string &pointer);

} // namespace trafficgp
