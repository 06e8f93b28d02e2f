#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "trafficgp/common.hpp"

namespace trafficgp {

struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0; // amount actually added to the diagonal
};

/// Cholesky factorization with jitter escalation: attempt the matrix as
/// given, then add {1e-6, 1e-5, 1e-4} * scale to the diagonal before giving
/// up. `scale` is the kernel variance.
inline JitteredCholesky chol_with_jitter(Eigen::MatrixXd M, double scale,
                                         const char *what) {
  static constexpr double ladder[] = {0.0, 1e-6, 1e-5, 1e-4};
  double applied = 0.0;
  for (double level : ladder) {
    const double target = level * scale;
    if (target > applied) {
      M.diagonal().array() += target - applied;
      applied = target;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) return {std::move(llt), applied};
  }
  throw ConditioningError(std::string(what) +
                          ": Cholesky failed after jitter escalation");
}

inline double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

} // namespace trafficgp
