#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "trafficgp/types.hpp"

namespace trafficgp {

enum class KernelFamily { SE, Matern32, Matern52 };

KernelFamily kernel_family_from_string(const std::string &name);
std::string kernel_family_to_string(KernelFamily family);

/// Stationary kernel with a rotation re-parametrization: squared distances
/// are measured in coordinates rotated by `angle`, with independent
/// lengthscales along the rotated axes. With angle = 0 this reduces to a
/// plain ARD kernel. Lengthscales are in grid-cell units.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  double variance = 1.0;       // sigma^2, (m/s)^2
  double lengthscale_s = 1.0;  // along the rotated space axis, cell units
  double lengthscale_t = 1.0;  // along the rotated time axis, cell units
  double angle = 0.0;          // radians
  double noise_variance = 0.1; // sigma_eps^2, (m/s)^2

  void validate() const;
  /// angle folded into (-pi/2, pi/2]; the quadratic form is pi-periodic.
  double wrapped_angle() const;
  /// Equivalent spec with the longer lengthscale on the first rotated axis
  /// (the kernel is invariant under swapping the axes and rotating by
  /// pi/2), angle wrapped. Fitted wave angles are reported in this form.
  KernelSpec canonical() const;
};

/// Intrinsic coregionalization across lanes: B = A * A^T, A is L x r.
struct CoregionalizationSpec {
  int outputs = 1;
  int rank = 1;
  Eigen::MatrixXd A;

  Eigen::MatrixXd B() const { return A * A.transpose(); }
  void validate() const;
  static CoregionalizationSpec identity(int outputs, int rank);
};

Eigen::Matrix2d rotation_matrix(double alpha);

double ard_sq_dist(const Eigen::Vector2d &x, const Eigen::Vector2d &xp,
                   double lengthscale_s, double lengthscale_t);

double rotated_sq_dist(const Eigen::Vector2d &x, const Eigen::Vector2d &xp,
                       double lengthscale_s, double lengthscale_t,
                       double alpha);

double kernel_eval(const KernelSpec &spec, const Eigen::Vector2d &x,
                   const Eigen::Vector2d &xp);

/// Multi-output covariance k(x, x') * B[lane_i, lane_j]; lanes are 1-based.
double icm_eval(const KernelSpec &spec, const CoregionalizationSpec &coreg,
                const Eigen::Vector2d &x, int lane_i,
                const Eigen::Vector2d &xp, int lane_j);

Eigen::MatrixXd gram(const KernelSpec &spec, const Eigen::MatrixX2d &X1,
                     const Eigen::MatrixX2d &X2);

/// Gram matrix over the extended input space (location, lane). `coreg` may
/// be null for single-output; lane vectors must then be empty.
Eigen::MatrixXd gram(const KernelSpec &spec,
                     const CoregionalizationSpec *coreg,
                     const Eigen::MatrixX2d &X1, const std::vector<int> &lane1,
                     const Eigen::MatrixX2d &X2, const std::vector<int> &lane2);

struct GradRequest {
  bool first_arg_coords = false; // fill dx_s/dx_t (for inducing-point grads)
  bool base_matrix = false;      // fill base (for coregionalization grads)
};

/// Kernel matrix together with its derivatives with respect to the
/// unconstrained hyperparameters {log variance, log lengthscales, angle}.
struct GramGradients {
  Eigen::MatrixXd K;
  Eigen::MatrixXd d_log_variance;
  Eigen::MatrixXd d_log_lengthscale_s;
  Eigen::MatrixXd d_log_lengthscale_t;
  Eigen::MatrixXd d_angle;
  Eigen::MatrixXd dx_s; // dk/d(first-argument space coord), per pair
  Eigen::MatrixXd dx_t;
  Eigen::MatrixXd base; // kernel value without the coregionalization factor
};

GramGradients gram_gradients(const KernelSpec &spec,
                             const CoregionalizationSpec *coreg,
                             const Eigen::MatrixX2d &X1,
                             const std::vector<int> &lane1,
                             const Eigen::MatrixX2d &X2,
                             const std::vector<int> &lane2,
                             const GradRequest &req = {});

} // namespace trafficgp
