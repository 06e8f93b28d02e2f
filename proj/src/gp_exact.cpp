#include "trafficgp/gp_exact.hpp"

#include <cmath>

#include "trafficgp/linalg.hpp"

namespace trafficgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

Eigen::LLT<Eigen::MatrixXd> noisy_factor(const KernelSpec &spec,
                                         const ObservationSet &train) {
  Eigen::MatrixXd C = gram(spec, train.X, train.X);
  C.diagonal().array() += spec.noise_variance;
  return chol_with_jitter(std::move(C), spec.variance, "gp_exact").llt;
}
} // namespace

Posterior posterior(const KernelSpec &spec, const ObservationSet &train,
                    const Eigen::MatrixX2d &Xq, const ExactGPOptions &opts) {
  spec.validate();
  if (train.n() < 1) throw DataError("gp_exact: empty training set");

  Posterior post;
  if (Xq.rows() == 0) {
    post.mean.resize(0);
    post.covariance.resize(0, 0);
    return post;
  }

  const auto llt = noisy_factor(spec, train);

  double mean_shift = 0.0;
  Eigen::VectorXd y = train.y;
  if (opts.subtract_mean) {
    mean_shift = y.mean();
    y.array() -= mean_shift;
  }

  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd Knq = gram(spec, train.X, Xq);
  post.mean = Knq.transpose() * alpha;
  if (opts.subtract_mean) post.mean.array() += mean_shift;

  const Eigen::MatrixXd V =
      llt.matrixL().solve(Knq); // L^-1 K_nq, so cov = K_qq - V^T V
  post.covariance = gram(spec, Xq, Xq) - V.transpose() * V;
  if (opts.include_noise_variance)
    post.covariance.diagonal().array() += spec.noise_variance;
  post.covariance.diagonal() = post.covariance.diagonal().cwiseMax(0.0);
  return post;
}

double log_marginal_likelihood(const KernelSpec &spec,
                               const ObservationSet &train) {
  spec.validate();
  const Eigen::Index n = train.n();
  if (n < 1) throw DataError("gp_exact: empty training set");

  const auto llt = noisy_factor(spec, train);
  const double quad = train.y.dot(llt.solve(train.y));
  return -0.5 * quad - 0.5 * log_det_from_llt(llt) -
         0.5 * static_cast<double>(n) * kLog2Pi;
}

} // namespace trafficgp
