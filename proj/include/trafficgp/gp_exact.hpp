#pragma once

#include <Eigen/Dense>

#include "trafficgp/kernels.hpp"
#include "trafficgp/types.hpp"

namespace trafficgp {

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance; // q x q, or q x 1 when diagonal_only
  bool diagonal_only = false;

  Eigen::VectorXd variance() const {
    if (diagonal_only) return covariance.col(0);
    return covariance.diagonal();
  }
};

struct ExactGPOptions {
  bool include_noise_variance = false; // add sigma_eps^2 to the diagonal
  bool subtract_mean = false; // constant-mean mode (off: zero prior mean)
};

/// Closed-form GP posterior at the query points. O(n^3); used directly for
/// small problems and as the correctness oracle for the sparse solver.
Posterior posterior(const KernelSpec &spec, const ObservationSet &train,
                    const Eigen::MatrixX2d &Xq,
                    const ExactGPOptions &opts = {});

/// log N(y | 0, K_nn + sigma_eps^2 I), via Cholesky log-determinant.
double log_marginal_likelihood(const KernelSpec &spec,
                               const ObservationSet &train);

} // namespace trafficgp
