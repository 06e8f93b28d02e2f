#include "trafficgp/kernels.hpp"

#include <cmath>

namespace trafficgp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;
constexpr double kPi = 3.141592653589793;

// Radial profile g(q) with k = sigma^2 * g(q), q the rotated squared
// distance, and its derivative dg/dq (finite at q = 0 for all families).
inline double profile(KernelFamily family, double q) {
  switch (family) {
  case KernelFamily::SE:
    return std::exp(-0.5 * q);
  case KernelFamily::Matern32: {
    const double d = std::sqrt(q);
    return (1.0 + kSqrt3 * d) * std::exp(-kSqrt3 * d);
  }
  case KernelFamily::Matern52: {
    const double d = std::sqrt(q);
    return (1.0 + kSqrt5 * d + (5.0 / 3.0) * q) * std::exp(-kSqrt5 * d);
  }
  }
  return 0.0;
}

inline double profile_dq(KernelFamily family, double q) {
  switch (family) {
  case KernelFamily::SE:
    return -0.5 * std::exp(-0.5 * q);
  case KernelFamily::Matern32:
    return -1.5 * std::exp(-kSqrt3 * std::sqrt(q));
  case KernelFamily::Matern52: {
    const double d = std::sqrt(q);
    return -(5.0 / 6.0) * (1.0 + kSqrt5 * d) * std::exp(-kSqrt5 * d);
  }
  }
  return 0.0;
}

} // namespace

KernelFamily kernel_family_from_string(const std::string &name) {
  if (name == "SE") return KernelFamily::SE;
  if (name == "Matern32") return KernelFamily::Matern32;
  if (name == "Matern52") return KernelFamily::Matern52;
  throw DataError("unknown kernel family: " + name);
}

std::string kernel_family_to_string(KernelFamily family) {
  switch (family) {
  case KernelFamily::SE: return "SE";
  case KernelFamily::Matern32: return "Matern32";
  case KernelFamily::Matern52: return "Matern52";
  }
  return "?";
}

void KernelSpec::validate() const {
  if (!(variance > 0.0)) throw DataError("kernel: variance must be > 0");
  if (!(lengthscale_s > 0.0) || !(lengthscale_t > 0.0))
    throw DataError("kernel: lengthscales must be > 0");
  if (!(noise_variance > 0.0))
    throw DataError("kernel: noise variance must be > 0");
  if (!std::isfinite(angle)) throw DataError("kernel: angle must be finite");
}

double KernelSpec::wrapped_angle() const {
  double w = std::remainder(angle, kPi);
  if (w <= -0.5 * kPi) w += kPi;
  return w;
}

KernelSpec KernelSpec::canonical() const {
  KernelSpec c = *this;
  if (c.lengthscale_t > c.lengthscale_s) {
    std::swap(c.lengthscale_s, c.lengthscale_t);
    c.angle += 0.5 * kPi;
  }
  c.angle = c.wrapped_angle();
  return c;
}

void CoregionalizationSpec::validate() const {
  if (outputs < 1) throw DataError("coregionalization: outputs must be >= 1");
  if (rank < 1 || rank > outputs)
    throw DataError("coregionalization: rank must be in [1, outputs]");
  if (A.rows() != outputs || A.cols() != rank)
    throw DataError("coregionalization: A must be outputs x rank");
  if (!A.allFinite()) throw DataError("coregionalization: A must be finite");
}

CoregionalizationSpec CoregionalizationSpec::identity(int outputs, int rank) {
  CoregionalizationSpec c;
  c.outputs = outputs;
  c.rank = rank;
  c.A = Eigen::MatrixXd::Identity(outputs, rank);
  return c;
}

Eigen::Matrix2d rotation_matrix(double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

double ard_sq_dist(const Eigen::Vector2d &x, const Eigen::Vector2d &xp,
                   double lengthscale_s, double lengthscale_t) {
  const double a = (x(0) - xp(0)) / lengthscale_s;
  const double b = (x(1) - xp(1)) / lengthscale_t;
  return a * a + b * b;
}

double rotated_sq_dist(const Eigen::Vector2d &x, const Eigen::Vector2d &xp,
                       double lengthscale_s, double lengthscale_t,
                       double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  const double dx = x(0) - xp(0), dt = x(1) - xp(1);
  const double u1 = (c * dx - s * dt) / lengthscale_s;
  const double u2 = (s * dx + c * dt) / lengthscale_t;
  return u1 * u1 + u2 * u2;
}

double kernel_eval(const KernelSpec &spec, const Eigen::Vector2d &x,
                   const Eigen::Vector2d &xp) {
  const double q = rotated_sq_dist(x, xp, spec.lengthscale_s,
                                   spec.lengthscale_t, spec.angle);
  return spec.variance * profile(spec.family, q);
}

double icm_eval(const KernelSpec &spec, const CoregionalizationSpec &coreg,
                const Eigen::Vector2d &x, int lane_i,
                const Eigen::Vector2d &xp, int lane_j) {
  if (lane_i < 1 || lane_i > coreg.outputs || lane_j < 1 ||
      lane_j > coreg.outputs)
    throw DataError("icm_eval: lane index out of range");
  const Eigen::MatrixXd B = coreg.B();
  return kernel_eval(spec, x, xp) * B(lane_i - 1, lane_j - 1);
}

Eigen::MatrixXd gram(const KernelSpec &spec, const Eigen::MatrixX2d &X1,
                     const Eigen::MatrixX2d &X2) {
  return gram(spec, nullptr, X1, {}, X2, {});
}

Eigen::MatrixXd gram(const KernelSpec &spec,
                     const CoregionalizationSpec *coreg,
                     const Eigen::MatrixX2d &X1, const std::vector<int> &lane1,
                     const Eigen::MatrixX2d &X2,
                     const std::vector<int> &lane2) {
  const Eigen::Index n1 = X1.rows(), n2 = X2.rows();
  Eigen::MatrixXd B;
  if (coreg) B = coreg->B();
  Eigen::MatrixXd K(n1, n2);
  const double c = std::cos(spec.angle), s = std::sin(spec.angle);
  for (Eigen::Index a = 0; a < n1; ++a) {
    for (Eigen::Index b = 0; b < n2; ++b) {
      const double dx = X1(a, 0) - X2(b, 0), dt = X1(a, 1) - X2(b, 1);
      const double u1 = (c * dx - s * dt) / spec.lengthscale_s;
      const double u2 = (s * dx + c * dt) / spec.lengthscale_t;
      double k = spec.variance * profile(spec.family, u1 * u1 + u2 * u2);
      if (coreg) k *= B(lane1[a] - 1, lane2[b] - 1);
      K(a, b) = k;
    }
  }
  return K;
}

GramGradients gram_gradients(const KernelSpec &spec,
                             const CoregionalizationSpec *coreg,
                             const Eigen::MatrixX2d &X1,
                             const std::vector<int> &lane1,
                             const Eigen::MatrixX2d &X2,
                             const std::vector<int> &lane2,
                             const GradRequest &req) {
  const Eigen::Index n1 = X1.rows(), n2 = X2.rows();
  Eigen::MatrixXd B;
  if (coreg) B = coreg->B();

  GramGradients g;
  g.K.resize(n1, n2);
  g.d_log_variance.resize(n1, n2);
  g.d_log_lengthscale_s.resize(n1, n2);
  g.d_log_lengthscale_t.resize(n1, n2);
  g.d_angle.resize(n1, n2);
  if (req.first_arg_coords) {
    g.dx_s.resize(n1, n2);
    g.dx_t.resize(n1, n2);
  }
  if (req.base_matrix) g.base.resize(n1, n2);

  const double c = std::cos(spec.angle), s = std::sin(spec.angle);
  const double inv_ls2 = 1.0 / (spec.lengthscale_s * spec.lengthscale_s);
  const double inv_lt2 = 1.0 / (spec.lengthscale_t * spec.lengthscale_t);

  for (Eigen::Index a = 0; a < n1; ++a) {
    for (Eigen::Index b = 0; b < n2; ++b) {
      const double dx = X1(a, 0) - X2(b, 0), dt = X1(a, 1) - X2(b, 1);
      const double u1 = c * dx - s * dt;  // rotated offsets (unscaled)
      const double u2 = s * dx + c * dt;
      const double u1p = -s * dx - c * dt; // d(u)/d(angle)
      const double u2p = c * dx - s * dt;
      const double q = u1 * u1 * inv_ls2 + u2 * u2 * inv_lt2;

      const double base = spec.variance * profile(spec.family, q);
      const double bfac = coreg ? B(lane1[a] - 1, lane2[b] - 1) : 1.0;
      const double dkdq = spec.variance * profile_dq(spec.family, q) * bfac;

      g.K(a, b) = base * bfac;
      g.d_log_variance(a, b) = base * bfac;
      g.d_log_lengthscale_s(a, b) = dkdq * (-2.0 * u1 * u1 * inv_ls2);
      g.d_log_lengthscale_t(a, b) = dkdq * (-2.0 * u2 * u2 * inv_lt2);
      g.d_angle(a, b) =
          dkdq * 2.0 * (u1 * u1p * inv_ls2 + u2 * u2p * inv_lt2);
      if (req.first_arg_coords) {
        // dq/d(first arg) = 2 R^T M u
        const double m1 = u1 * inv_ls2, m2 = u2 * inv_lt2;
        g.dx_s(a, b) = dkdq * 2.0 * (c * m1 + s * m2);
        g.dx_t(a, b) = dkdq * 2.0 * (-s * m1 + c * m2);
      }
      if (req.base_matrix) g.base(a, b) = base;
    }
  }
  return g;
}

} // namespace trafficgp
