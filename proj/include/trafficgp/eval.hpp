#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trafficgp/baseline_asm.hpp"
#include "trafficgp/io.hpp"
#include "trafficgp/types.hpp"
#include "trafficgp/vsgp.hpp"

namespace trafficgp {

/// Observed cells keep the training value; everything else comes from the
/// estimate. The estimate must cover every cell the observed field misses.
SpeedField composite_field(const SpeedField &estimate,
                           const SpeedField &observed);

struct MetricResult {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t evaluated_cells = 0;
  std::size_t excluded_cells = 0; // cells missing in the truth field
};

/// MAE/RMSE over all truth-present cells and lanes. With `unobserved_only`,
/// cells present in `observed` are skipped (diagnostic mode).
MetricResult metrics(const SpeedField &truth, const SpeedField &estimate,
                     bool unobserved_only = false,
                     const SpeedField *observed = nullptr);
double rmse(const SpeedField &truth, const SpeedField &estimate);
double mae(const SpeedField &truth, const SpeedField &estimate);

/// Per-lane k*std maps from the model's predictive y-variance; default
/// three standard deviations.
std::vector<Eigen::MatrixXd> uncertainty_field(const TrainedModel &model,
                                               const SpatioTemporalGrid &grid,
                                               double k = 3.0);

/// Wave speed implied by a kernel angle learned on cell-unit coordinates,
/// in km/h (negative = upstream propagation).
double wave_speed_from_angle(double alpha, double ds, double dt);

enum class Method { GpRotated, GpArd, PGpRotated, Asm };
Method method_from_string(const std::string &name);
std::string method_to_string(Method m);

struct SweepConfig {
  std::vector<double> rates{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  int seeds = 10;
  std::vector<Method> methods{Method::GpRotated, Method::GpArd, Method::Asm};
  std::uint64_t base_seed = 0;
  OptimizerConfig optimizer;
  std::optional<KernelSpec> initial_kernel;    // default: derived from data
  std::optional<KernelSpec> pretrained_kernel; // required for PGpRotated
  AsmParams asm_params;
  std::set<int> lanes; // empty: all lanes
  int threads = 1;
};

struct SweepRow {
  std::string method;
  double rate = 0.0;
  int seed = 0; // repetition index
  double mae = 0.0;
  double rmse = 0.0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
  std::string status; // "ok" or an error summary
};

struct ExperimentReport {
  std::vector<SweepRow> rows;

  struct Aggregate {
    std::string method;
    double rate = 0.0;
    int runs = 0;
    double mae_mean = 0.0, mae_std = 0.0;
    double rmse_mean = 0.0, rmse_std = 0.0;
  };
  std::vector<Aggregate> aggregates() const;
};

/// The penetration-rate experiment: for every (method, rate, seed), sample
/// probe vehicles, estimate, composite with the observed cells, and score
/// against the full-data truth field. Failing cells are recorded, not
/// fatal. Deterministic for a fixed config and base seed.
ExperimentReport run_sweep(const std::vector<TrajectoryPoint> &points,
                           const SpatioTemporalGrid &grid,
                           const SweepConfig &config);

void write_report_csv(const ExperimentReport &report, const std::string &path);
Json report_aggregate_json(const ExperimentReport &report);

} // namespace trafficgp
