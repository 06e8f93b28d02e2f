#include "trafficgp/config.hpp"

#include <cmath>

namespace trafficgp {

namespace {

void check_keys(const Json &j, const std::string &ptr,
                const std::set<std::string> &allowed) {
  if (!j.is_object())
    throw ConfigError(ptr + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(ptr + "/" + it.key() + ": unknown key");
}

double need_number(const Json &j, const std::string &ptr) {
  if (!j.is_number()) throw ConfigError(ptr + ": expected a number");
  return j.get<double>();
}

double positive(const Json &j, const std::string &ptr) {
  const double v = need_number(j, ptr);
  if (!(v > 0.0)) throw ConfigError(ptr + ": must be > 0");
  return v;
}

int positive_int(const Json &j, const std::string &ptr) {
  if (!j.is_number_integer()) throw ConfigError(ptr + ": expected an integer");
  const int v = j.get<int>();
  if (v < 1) throw ConfigError(ptr + ": must be >= 1");
  return v;
}

std::string need_string(const Json &j, const std::string &ptr) {
  if (!j.is_string()) throw ConfigError(ptr + ": expected a string");
  return j.get<std::string>();
}

SpatioTemporalGrid parse_grid(const Json &j, const std::string &ptr) {
  check_keys(j, ptr, {"ds", "dt", "S", "T", "L", "s_origin", "t_origin"});
  SpatioTemporalGrid g;
  if (!j.contains("ds") || !j.contains("dt") || !j.contains("S") ||
      !j.contains("T"))
    throw ConfigError(ptr + ": ds, dt, S and T are required");
  g.ds = positive(j.at("ds"), ptr + "/ds");
  g.dt = positive(j.at("dt"), ptr + "/dt");
  g.S = positive_int(j.at("S"), ptr + "/S");
  g.T = positive_int(j.at("T"), ptr + "/T");
  g.L = j.contains("L") ? positive_int(j.at("L"), ptr + "/L") : 1;
  if (j.contains("s_origin"))
    g.s_origin = need_number(j.at("s_origin"), ptr + "/s_origin");
  if (j.contains("t_origin"))
    g.t_origin = need_number(j.at("t_origin"), ptr + "/t_origin");
  return g;
}

KernelSpec parse_kernel(const Json &j, const std::string &ptr,
                        std::optional<CoregionalizationSpec> *coreg) {
  check_keys(j, ptr,
             {"family", "variance", "lengthscale_s", "lengthscale_t", "angle",
              "noise_variance", "coregionalization"});
  try {
    return kernel_spec_from_json(j, coreg);
  } catch (const std::exception &e) {
    throw ConfigError(ptr + ": " + e.what());
  }
}

} // namespace

Json scenario_to_json(const WaveScenario &scn) {
  Json bands = Json::array();
  for (const auto &b : scn.bands)
    bands.push_back(Json{{"s0", b.s0},
                         {"t0", b.t0},
                         {"wave_speed_kmh", b.wave_speed_kmh},
                         {"width_s", b.width_s},
                         {"amplitude", b.amplitude}});
  return Json{{"grid", grid_to_json(scn.grid)},
              {"v_free", scn.v_free},
              {"v_jam", scn.v_jam},
              {"bands", bands},
              {"noise_std", scn.noise_std},
              {"noise_seed", scn.noise_seed},
              {"min_headway_m", scn.min_headway_m}};
}

WaveScenario scenario_from_json(const Json &j, const std::string &ptr) {
  check_keys(j, ptr,
             {"grid", "v_free", "v_jam", "bands", "noise_std", "noise_seed",
              "min_headway_m"});
  WaveScenario scn = default_scenario();
  if (j.contains("grid")) scn.grid = parse_grid(j.at("grid"), ptr + "/grid");
  if (j.contains("v_free"))
    scn.v_free = positive(j.at("v_free"), ptr + "/v_free");
  if (j.contains("v_jam"))
    scn.v_jam = need_number(j.at("v_jam"), ptr + "/v_jam");
  if (j.contains("bands")) {
    if (!j.at("bands").is_array())
      throw ConfigError(ptr + "/bands: expected an array");
    scn.bands.clear();
    for (std::size_t i = 0; i < j.at("bands").size(); ++i) {
      const std::string bptr = ptr + "/bands/" + std::to_string(i);
      const Json &bj = j.at("bands")[i];
      check_keys(bj, bptr, {"s0", "t0", "wave_speed_kmh", "width_s",
                            "amplitude"});
      WaveBand b;
      if (bj.contains("s0")) b.s0 = need_number(bj.at("s0"), bptr + "/s0");
      if (bj.contains("t0")) b.t0 = need_number(bj.at("t0"), bptr + "/t0");
      if (bj.contains("wave_speed_kmh"))
        b.wave_speed_kmh =
            need_number(bj.at("wave_speed_kmh"), bptr + "/wave_speed_kmh");
      if (bj.contains("width_s"))
        b.width_s = positive(bj.at("width_s"), bptr + "/width_s");
      if (bj.contains("amplitude"))
        b.amplitude = positive(bj.at("amplitude"), bptr + "/amplitude");
      scn.bands.push_back(b);
    }
  }
  if (j.contains("noise_std")) {
    scn.noise_std = need_number(j.at("noise_std"), ptr + "/noise_std");
    if (scn.noise_std < 0.0)
      throw ConfigError(ptr + "/noise_std: must be >= 0");
  }
  if (j.contains("noise_seed"))
    scn.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  if (j.contains("min_headway_m"))
    scn.min_headway_m =
        positive(j.at("min_headway_m"), ptr + "/min_headway_m");
  try {
    scn.validate();
  } catch (const std::exception &e) {
    throw ConfigError(ptr + ": " + e.what());
  }
  return scn;
}

RunConfig parse_config(const Json &j) {
  check_keys(j, "", {"data", "model", "baselines", "sweep", "synth", "output",
                     "seed", "threads"});
  RunConfig cfg;
  cfg.raw = j;

  if (j.contains("data")) {
    const Json &d = j.at("data");
    check_keys(d, "/data",
               {"trajectories", "columns", "grid", "lanes", "penetration"});
    if (d.contains("trajectories"))
      cfg.trajectories = need_string(d.at("trajectories"),
                                     "/data/trajectories");
    if (d.contains("columns")) {
      const Json &c = d.at("columns");
      check_keys(c, "/data/columns", {"vehicle_id", "t", "s", "lane", "speed"});
      if (c.contains("vehicle_id"))
        cfg.schema.vehicle_id = need_string(c.at("vehicle_id"),
                                            "/data/columns/vehicle_id");
      if (c.contains("t")) cfg.schema.t = need_string(c.at("t"),
                                                      "/data/columns/t");
      if (c.contains("s")) cfg.schema.s = need_string(c.at("s"),
                                                      "/data/columns/s");
      if (c.contains("lane"))
        cfg.schema.lane = need_string(c.at("lane"), "/data/columns/lane");
      if (c.contains("speed"))
        cfg.schema.speed = need_string(c.at("speed"), "/data/columns/speed");
    }
    if (d.contains("grid")) cfg.grid = parse_grid(d.at("grid"), "/data/grid");
    if (d.contains("lanes")) {
      if (!d.at("lanes").is_array())
        throw ConfigError("/data/lanes: expected an array");
      for (std::size_t i = 0; i < d.at("lanes").size(); ++i)
        cfg.lanes.insert(positive_int(d.at("lanes")[i],
                                      "/data/lanes/" + std::to_string(i)));
    }
    if (d.contains("penetration")) {
      const Json &p = d.at("penetration");
      check_keys(p, "/data/penetration", {"rate", "seed"});
      if (!p.contains("rate"))
        throw ConfigError("/data/penetration/rate: required");
      const double rate = need_number(p.at("rate"), "/data/penetration/rate");
      if (!(rate > 0.0) || rate > 1.0)
        throw ConfigError("/data/penetration/rate: must be in (0, 1]");
      cfg.penetration_rate = rate;
      if (p.contains("seed"))
        cfg.penetration_seed = p.at("seed").get<std::uint64_t>();
    }
  }

  if (j.contains("model")) {
    const Json &m = j.at("model");
    check_keys(m, "/model",
               {"mode", "kernel", "vsgp", "physical_units", "file"});
    if (m.contains("mode")) {
      cfg.mode = need_string(m.at("mode"), "/model/mode");
      if (cfg.mode != "gp_rotated" && cfg.mode != "gp_ard" &&
          cfg.mode != "p_gp_rotated")
        throw ConfigError("/model/mode: must be gp_rotated, gp_ard or "
                          "p_gp_rotated");
    }
    if (m.contains("kernel"))
      cfg.kernel = parse_kernel(m.at("kernel"), "/model/kernel", &cfg.coreg);
    if (m.contains("file"))
      cfg.model_file = need_string(m.at("file"), "/model/file");
    if (m.contains("physical_units")) {
      if (!m.at("physical_units").is_boolean())
        throw ConfigError("/model/physical_units: expected a boolean");
      cfg.physical_units = m.at("physical_units").get<bool>();
    }
    if (m.contains("vsgp")) {
      const Json &v = m.at("vsgp");
      check_keys(v, "/model/vsgp",
                 {"max_iterations", "relative_tolerance", "tolerance_window",
                  "inducing_fraction", "max_inducing", "optimize_inducing",
                  "covariance_batch_cap"});
      if (v.contains("max_iterations"))
        cfg.optimizer.max_iterations =
            positive_int(v.at("max_iterations"), "/model/vsgp/max_iterations");
      if (v.contains("relative_tolerance"))
        cfg.optimizer.relative_tolerance = positive(
            v.at("relative_tolerance"), "/model/vsgp/relative_tolerance");
      if (v.contains("tolerance_window"))
        cfg.optimizer.tolerance_window = positive_int(
            v.at("tolerance_window"), "/model/vsgp/tolerance_window");
      if (v.contains("inducing_fraction"))
        cfg.optimizer.inducing_fraction = positive(
            v.at("inducing_fraction"), "/model/vsgp/inducing_fraction");
      if (v.contains("max_inducing"))
        cfg.optimizer.max_inducing =
            positive_int(v.at("max_inducing"), "/model/vsgp/max_inducing");
      if (v.contains("optimize_inducing")) {
        if (!v.at("optimize_inducing").is_boolean())
          throw ConfigError("/model/vsgp/optimize_inducing: expected a "
                            "boolean");
        cfg.optimizer.optimize_inducing =
            v.at("optimize_inducing").get<bool>();
      }
      if (v.contains("covariance_batch_cap"))
        cfg.optimizer.covariance_batch_cap = positive_int(
            v.at("covariance_batch_cap"), "/model/vsgp/covariance_batch_cap");
    }
  }

  if (j.contains("baselines")) {
    const Json &b = j.at("baselines");
    check_keys(b, "/baselines", {"asm"});
    if (b.contains("asm")) {
      const Json &a = b.at("asm");
      check_keys(a, "/baselines/asm",
                 {"c_congestion_kmh", "c_free_kmh", "sigma_space_m",
                  "tau_time_s", "crossover_kmh", "transition_kmh"});
      if (a.contains("c_congestion_kmh"))
        cfg.asm_params.c_congestion_kmh = need_number(
            a.at("c_congestion_kmh"), "/baselines/asm/c_congestion_kmh");
      if (a.contains("c_free_kmh"))
        cfg.asm_params.c_free_kmh =
            need_number(a.at("c_free_kmh"), "/baselines/asm/c_free_kmh");
      if (a.contains("sigma_space_m"))
        cfg.asm_params.sigma_space_m = positive(
            a.at("sigma_space_m"), "/baselines/asm/sigma_space_m");
      if (a.contains("tau_time_s"))
        cfg.asm_params.tau_time_s =
            positive(a.at("tau_time_s"), "/baselines/asm/tau_time_s");
      if (a.contains("crossover_kmh"))
        cfg.asm_params.crossover_kmh = need_number(
            a.at("crossover_kmh"), "/baselines/asm/crossover_kmh");
      if (a.contains("transition_kmh"))
        cfg.asm_params.transition_kmh = positive(
            a.at("transition_kmh"), "/baselines/asm/transition_kmh");
      try {
        cfg.asm_params.validate();
      } catch (const std::exception &e) {
        throw ConfigError(std::string("/baselines/asm: ") + e.what());
      }
    }
  }

  if (j.contains("sweep")) {
    cfg.has_sweep = true;
    const Json &s = j.at("sweep");
    check_keys(s, "/sweep", {"rates", "seeds", "methods"});
    if (s.contains("rates")) {
      if (!s.at("rates").is_array() || s.at("rates").empty())
        throw ConfigError("/sweep/rates: expected a nonempty array");
      cfg.sweep_rates.clear();
      for (std::size_t i = 0; i < s.at("rates").size(); ++i) {
        const std::string ptr = "/sweep/rates/" + std::to_string(i);
        const double r = need_number(s.at("rates")[i], ptr);
        if (!(r > 0.0) || r > 1.0)
          throw ConfigError(ptr + ": must be in (0, 1]");
        cfg.sweep_rates.push_back(r);
      }
    }
    if (s.contains("seeds"))
      cfg.sweep_seeds = positive_int(s.at("seeds"), "/sweep/seeds");
    if (s.contains("methods")) {
      if (!s.at("methods").is_array() || s.at("methods").empty())
        throw ConfigError("/sweep/methods: expected a nonempty array");
      cfg.sweep_methods.clear();
      for (std::size_t i = 0; i < s.at("methods").size(); ++i) {
        const std::string ptr = "/sweep/methods/" + std::to_string(i);
        try {
          cfg.sweep_methods.push_back(
              method_from_string(need_string(s.at("methods")[i], ptr)));
        } catch (const ConfigError &) {
          throw;
        } catch (const std::exception &e) {
          throw ConfigError(ptr + ": " + e.what());
        }
      }
    }
  }

  if (j.contains("synth")) {
    const Json &s = j.at("synth");
    check_keys(s, "/synth", {"scenario", "n_vehicles"});
    cfg.scenario = s.contains("scenario")
                       ? scenario_from_json(s.at("scenario"),
                                            "/synth/scenario")
                       : default_scenario();
    if (s.contains("n_vehicles"))
      cfg.n_vehicles = positive_int(s.at("n_vehicles"), "/synth/n_vehicles");
  }

  if (j.contains("output")) {
    const Json &o = j.at("output");
    check_keys(o, "/output", {"directory"});
    if (o.contains("directory"))
      cfg.output_dir = need_string(o.at("directory"), "/output/directory");
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads"))
    cfg.threads = positive_int(j.at("threads"), "/threads");
  return cfg;
}

RunConfig load_config(const std::string &path) {
  Json j;
  try {
    j = load_json_file(path);
  } catch (const std::exception &e) {
    throw ConfigError(e.what());
  }
  return parse_config(j);
}

} // namespace trafficgp
