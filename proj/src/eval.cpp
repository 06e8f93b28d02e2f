#include "trafficgp/eval.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include "trafficgp/grid.hpp"
#include "trafficgp/multilane.hpp"
#include "trafficgp/parallel.hpp"
#include "trafficgp/rng.hpp"

namespace trafficgp {

SpeedField composite_field(const SpeedField &estimate,
                           const SpeedField &observed) {
  const auto &g = observed.grid;
  if (estimate.grid.S != g.S || estimate.grid.T != g.T ||
      estimate.grid.L != g.L)
    throw DataError("composite_field: grids differ");

  SpeedField out(g);
  for (int l = 1; l <= g.L; ++l)
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j) {
        if (observed.present(l, i, j)) {
          out.set(l, i, j, observed.value(l, i, j),
                  observed.count(l, i, j));
        } else {
          if (!estimate.present(l, i, j))
            throw DataError("composite_field: estimate missing at an "
                            "unobserved cell (estimation must cover all "
                            "cells)");
          out.set(l, i, j, estimate.value(l, i, j), 1);
        }
      }
  return out;
}

MetricResult metrics(const SpeedField &truth, const SpeedField &estimate,
                     bool unobserved_only, const SpeedField *observed) {
  const auto &g = truth.grid;
  if (estimate.grid.S != g.S || estimate.grid.T != g.T ||
      estimate.grid.L != g.L)
    throw DataError("metrics: grids differ");
  if (unobserved_only && observed == nullptr)
    throw DataError("metrics: unobserved_only needs the observed field");

  MetricResult r;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (int l = 1; l <= g.L; ++l)
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j) {
        if (!truth.present(l, i, j)) {
          ++r.excluded_cells;
          continue;
        }
        if (unobserved_only && observed->present(l, i, j)) continue;
        if (!estimate.present(l, i, j))
          throw DataError("metrics: estimate missing at an evaluated cell");
        const double e = truth.value(l, i, j) - estimate.value(l, i, j);
        abs_sum += std::abs(e);
        sq_sum += e * e;
        ++r.evaluated_cells;
      }
  if (r.evaluated_cells == 0)
    throw DataError("metrics: no evaluable cells");
  r.mae = abs_sum / double(r.evaluated_cells);
  r.rmse = std::sqrt(sq_sum / double(r.evaluated_cells));
  return r;
}

double rmse(const SpeedField &truth, const SpeedField &estimate) {
  return metrics(truth, estimate).rmse;
}

double mae(const SpeedField &truth, const SpeedField &estimate) {
  return metrics(truth, estimate).mae;
}

std::vector<Eigen::MatrixXd> uncertainty_field(const TrainedModel &model,
                                               const SpatioTemporalGrid &grid,
                                               double k) {
  const JointPrediction pred = predict_joint(model, grid);
  std::vector<Eigen::MatrixXd> out;
  for (int l = 0; l < grid.L; ++l)
    out.push_back(k * pred.variance.values[l].cwiseMax(0.0).cwiseSqrt());
  return out;
}

double wave_speed_from_angle(double alpha, double ds, double dt) {
  if (!(ds > 0.0) || !(dt > 0.0))
    throw DataError("wave_speed_from_angle: cell sizes must be positive");
  constexpr double kPi = 3.141592653589793;
  if (std::abs(std::remainder(alpha, kPi)) < 1e-9)
    throw DataError("wave_speed_from_angle: angle ~ 0 (mod pi) implies an "
                    "infinite wave speed");
  return -3.6 * (ds / dt) / std::tan(alpha);
}

Method method_from_string(const std::string &name) {
  if (name == "gp_rotated") return Method::GpRotated;
  if (name == "gp_ard") return Method::GpArd;
  if (name == "p_gp_rotated") return Method::PGpRotated;
  if (name == "asm") return Method::Asm;
  throw DataError("unknown method: " + name);
}

std::string method_to_string(Method m) {
  switch (m) {
  case Method::GpRotated: return "gp_rotated";
  case Method::GpArd: return "gp_ard";
  case Method::PGpRotated: return "p_gp_rotated";
  case Method::Asm: return "asm";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// possibly-empty per-lane observation set (cell centers, no lane channel)
ObservationSet lane_observations(const SpeedField &field, int lane) {
  std::vector<double> xs, ts, ys;
  const auto &g = field.grid;
  for (int i = 0; i < g.S; ++i)
    for (int j = 0; j < g.T; ++j)
      if (field.present(lane, i, j)) {
        xs.push_back(i + 0.5);
        ts.push_back(j + 0.5);
        ys.push_back(field.value(lane, i, j));
      }
  ObservationSet obs;
  obs.X.resize(Eigen::Index(xs.size()), 2);
  obs.y.resize(Eigen::Index(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    obs.X(Eigen::Index(i), 0) = xs[i];
    obs.X(Eigen::Index(i), 1) = ts[i];
    obs.y(Eigen::Index(i)) = ys[i];
  }
  return obs;
}

// keep only the selected lanes, renumbered 1..L'
std::vector<TrajectoryPoint> select_lanes(const std::vector<TrajectoryPoint> &points,
                                          const std::set<int> &lanes,
                                          SpatioTemporalGrid &grid) {
  if (lanes.empty()) return points;
  std::map<int, int> remap;
  for (int l : lanes) {
    if (l < 1 || l > grid.L)
      throw DataError("sweep: lane filter outside the grid");
    remap[l] = int(remap.size()) + 1;
  }
  std::vector<TrajectoryPoint> out;
  for (const auto &p : points) {
    auto it = remap.find(p.lane);
    if (it == remap.end()) continue;
    TrajectoryPoint q = p;
    q.lane = it->second;
    out.push_back(std::move(q));
  }
  grid.L = int(remap.size());
  return out;
}

struct EstimateOutcome {
  SpeedField field;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

EstimateOutcome run_method(Method method, const SweepConfig &config,
                           const SpatioTemporalGrid &grid,
                           const SpeedField &observed_field,
                           std::uint64_t fit_seed) {
  EstimateOutcome out;
  const ObservationSet train = field_to_observations(observed_field);

  if (method == Method::Asm) {
    const auto t0 = Clock::now();
    out.field = asm_estimate(train, grid, config.asm_params).field;
    out.predict_seconds = seconds_since(t0);
    return out;
  }

  OptimizerConfig opt = config.optimizer;
  if (method == Method::GpArd) opt.optimize_angle = false;
  KernelSpec init = config.initial_kernel.has_value()
                        ? *config.initial_kernel
                        : default_init_spec(train, grid);
  if (method == Method::GpArd) init.angle = 0.0;

  TrainedModel model;
  const auto t0 = Clock::now();
  if (grid.L == 1) {
    if (method == Method::PGpRotated) {
      if (!config.pretrained_kernel.has_value())
        throw DataError("p_gp_rotated requires a pretrained kernel spec");
      model = fit_pretrained(train, grid, *config.pretrained_kernel, fit_seed,
                             nullptr, opt);
    } else {
      model = fit(train, grid, init, opt, fit_seed);
    }
  } else {
    if (method == Method::PGpRotated)
      throw DataError("p_gp_rotated is defined for single-lane data");
    MultiLaneProblem problem;
    problem.grid = grid;
    for (int l = 1; l <= grid.L; ++l)
      problem.lanes.push_back(lane_observations(observed_field, l));
    problem.coreg = CoregionalizationSpec::identity(grid.L, grid.L);
    model = fit_joint(problem, init, opt, fit_seed);
  }
  out.fit_seconds = seconds_since(t0);

  const auto t1 = Clock::now();
  out.field = predict_joint(model, grid).estimate;
  out.predict_seconds = seconds_since(t1);
  return out;
}

} // namespace

ExperimentReport run_sweep(const std::vector<TrajectoryPoint> &points,
                           const SpatioTemporalGrid &grid,
                           const SweepConfig &config) {
  if (config.rates.empty() || config.methods.empty() || config.seeds < 1)
    throw DataError("sweep: need at least one rate, method and seed");
  for (double r : config.rates)
    if (!(r > 0.0) || r > 1.0)
      throw DataError("sweep: rates must be in (0, 1]");

  SpatioTemporalGrid eff_grid = grid;
  const std::vector<TrajectoryPoint> eff_points =
      select_lanes(points, config.lanes, eff_grid);
  if (eff_points.empty()) throw DataError("sweep: no points after lane filter");
  const SpeedField truth = aggregate_to_grid(eff_points, eff_grid);

  const std::size_t n_methods = config.methods.size();
  const std::size_t n_cells = config.rates.size() * std::size_t(config.seeds);
  ExperimentReport report;
  report.rows.assign(n_cells * n_methods, SweepRow{});

  parallel_for(n_cells, config.threads, [&](std::size_t cell) {
    const std::size_t r_idx = cell / std::size_t(config.seeds);
    const int s_idx = int(cell % std::size_t(config.seeds));
    const double rate = config.rates[r_idx];
    const std::uint64_t sampling_seed =
        derive_seed(config.base_seed, r_idx + 1, std::uint64_t(s_idx) + 1);

    SpeedField observed_field;
    bool sampled = false;
    std::string sample_error;
    try {
      const PenetrationSample sample =
          sample_penetration(eff_points, rate, sampling_seed);
      observed_field = aggregate_to_grid(sample.observed, eff_grid);
      sampled = true;
    } catch (const std::exception &e) {
      sample_error = e.what();
    }

    for (std::size_t m_idx = 0; m_idx < n_methods; ++m_idx) {
      SweepRow &row = report.rows[cell * n_methods + m_idx];
      row.method = method_to_string(config.methods[m_idx]);
      row.rate = rate;
      row.seed = s_idx;
      row.mae = std::numeric_limits<double>::quiet_NaN();
      row.rmse = std::numeric_limits<double>::quiet_NaN();
      if (!sampled) {
        row.status = "failed: " + sample_error;
        continue;
      }
      try {
        const std::uint64_t fit_seed =
            derive_seed(sampling_seed, 100 + m_idx);
        EstimateOutcome est = run_method(config.methods[m_idx], config,
                                         eff_grid, observed_field, fit_seed);
        const SpeedField composite =
            composite_field(est.field, observed_field);
        const MetricResult met = metrics(truth, composite);
        row.mae = met.mae;
        row.rmse = met.rmse;
        row.fit_seconds = est.fit_seconds;
        row.predict_seconds = est.predict_seconds;
        row.status = "ok";
      } catch (const std::exception &e) {
        row.status = std::string("failed: ") + e.what();
      }
    }
  });
  return report;
}

std::vector<ExperimentReport::Aggregate> ExperimentReport::aggregates() const {
  std::vector<Aggregate> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  for (const auto &row : rows) {
    const auto key = std::make_pair(row.method, row.rate);
    if (!index.count(key)) {
      index[key] = out.size();
      Aggregate a;
      a.method = row.method;
      a.rate = row.rate;
      out.push_back(a);
    }
  }
  for (auto &agg : out) {
    std::vector<double> maes, rmses;
    for (const auto &row : rows)
      if (row.method == agg.method && row.rate == agg.rate &&
          row.status == "ok") {
        maes.push_back(row.mae);
        rmses.push_back(row.rmse);
      }
    agg.runs = int(maes.size());
    auto mean_std = [](const std::vector<double> &v) {
      if (v.empty()) return std::make_pair(0.0, 0.0);
      double m = 0.0;
      for (double x : v) m += x;
      m /= double(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      const double sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1))
                                     : 0.0;
      return std::make_pair(m, sd);
    };
    std::tie(agg.mae_mean, agg.mae_std) = mean_std(maes);
    std::tie(agg.rmse_mean, agg.rmse_std) = mean_std(rmses);
  }
  return out;
}

void write_report_csv(const ExperimentReport &report,
                      const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  out << "method,rate,seed,mae,rmse,fit_seconds,predict_seconds,status\n";
  for (const auto &r : report.rows)
    out << r.method << ',' << format_double(r.rate) << ',' << r.seed << ','
        << format_double(r.mae) << ',' << format_double(r.rmse) << ','
        << format_double(r.fit_seconds) << ','
        << format_double(r.predict_seconds) << ',' << r.status << '\n';
}

Json report_aggregate_json(const ExperimentReport &report) {
  Json groups = Json::array();
  for (const auto &a : report.aggregates())
    groups.push_back(Json{{"method", a.method},
                          {"rate", a.rate},
                          {"runs", a.runs},
                          {"mae_mean", a.mae_mean},
                          {"mae_std", a.mae_std},
                          {"rmse_mean", a.rmse_mean},
                          {"rmse_std", a.rmse_std}});
  return Json{{"groups", groups}};
}

} // namespace trafficgp
