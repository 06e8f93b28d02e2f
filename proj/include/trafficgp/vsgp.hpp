#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trafficgp/gp_exact.hpp"
#include "trafficgp/kernels.hpp"
#include "trafficgp/types.hpp"

namespace trafficgp {

struct InducingSet {
  Eigen::MatrixX2d Z;          // cell-unit coordinates
  std::vector<int> lane;       // 1-based; empty for single-output
  Eigen::Index m() const { return Z.rows(); }
};

/// m = max(1, min(ceil(0.02 n), 500)) points uniform over [0,S) x [0,T).
InducingSet init_inducing(const SpatioTemporalGrid &grid, Eigen::Index n,
                          std::uint64_t seed);

struct ElboGradients {
  double d_log_variance = 0.0;
  double d_log_lengthscale_s = 0.0;
  double d_log_lengthscale_t = 0.0;
  double d_angle = 0.0;
  double d_log_noise = 0.0;
  Eigen::MatrixX2d dZ;  // per inducing point
  Eigen::MatrixXd dA;   // empty when not coregionalized
};

struct ElboResult {
  double value = 0.0;
  ElboGradients grad;
};

/// Titsias evidence lower bound and its gradients with respect to all free
/// parameters (unconstrained parametrization: positive parameters in log
/// space). Cost is O(n m^2) through the Woodbury reduction; the n x n
/// matrix is never formed.
ElboResult elbo(const KernelSpec &spec, const CoregionalizationSpec *coreg,
                const InducingSet &inducing, const ObservationSet &train,
                bool with_gradients = true);

struct OptimizerConfig {
  int max_iterations = 2000;
  double relative_tolerance = 1e-7;
  int tolerance_window = 20;
  bool optimize_hyperparameters = true;
  bool optimize_angle = true;   // false fixes the ARD orientation
  bool optimize_inducing = true;
  bool optimize_coregionalization = true;
  double inducing_fraction = 0.02;
  int max_inducing = 500;
  Eigen::Index covariance_batch_cap = 4096;
  // Sign-based adaptive steps (Rprop family), with step rejection whenever
  // a proposal decreases the ELBO.
  double initial_step = 0.05;
  double initial_step_inducing = 0.5;
  double step_grow = 1.2;
  double step_shrink = 0.5;
  double max_step = 1.0;
  double max_step_inducing = 5.0;
};

struct TrainingInfo {
  int iterations = 0;
  double initial_elbo = 0.0;
  double final_elbo = 0.0;
  std::uint64_t seed = 0;
  std::string data_digest;
  std::vector<double> elbo_trace; // accepted steps only (non-decreasing)
  std::string diagnostic;         // nonempty if optimization stopped early
};

struct TrainedModel {
  KernelSpec kernel;
  std::optional<CoregionalizationSpec> coreg;
  InducingSet inducing;
  SpatioTemporalGrid grid;
  Eigen::VectorXd mean_z;    // posterior mean of the inducing variables
  Eigen::MatrixXd precision; // posterior precision Lambda (SPD)
  TrainingInfo info;
  Eigen::Index covariance_batch_cap = 4096;
};

/// Scale-aware defaults: variance from the data, lengthscales a tenth of
/// the grid, angle zero.
KernelSpec default_init_spec(const ObservationSet &train,
                             const SpatioTemporalGrid &grid);

TrainedModel fit(const ObservationSet &train, const SpatioTemporalGrid &grid,
                 const KernelSpec &init, const OptimizerConfig &config,
                 std::uint64_t seed,
                 const CoregionalizationSpec *coreg_init = nullptr);

/// As fit() but with caller-provided initial inducing locations (used by the
/// multi-lane path, which allocates inducing points per lane).
TrainedModel fit_with_inducing(const ObservationSet &train,
                               const SpatioTemporalGrid &grid,
                               InducingSet inducing, const KernelSpec &init,
                               const OptimizerConfig &config,
                               std::uint64_t seed,
                               const CoregionalizationSpec *coreg_init);

/// No optimization at all: keep the given hyperparameters, draw random
/// inducing points, and compute the predictive cache.
TrainedModel fit_pretrained(const ObservationSet &train,
                            const SpatioTemporalGrid &grid,
                            const KernelSpec &pretrained, std::uint64_t seed,
                            const CoregionalizationSpec *coreg = nullptr,
                            const OptimizerConfig &config = {});

/// Sparse predictive distribution from the cached inducing posterior.
/// Full covariance is returned only for batches up to the configured cap;
/// larger batches get the diagonal. Queries outside the grid are allowed
/// (extrapolation) and only warn.
Posterior predict(const TrainedModel &model, const Eigen::MatrixX2d &Xq,
                  const std::vector<int> &lanes = {},
                  bool include_noise_variance = false);

/// Digest of an observation set (hex), recorded in trained models so a
/// cache can be matched to the data that produced it.
std::string observation_digest(const ObservationSet &obs);

} // namespace trafficgp
