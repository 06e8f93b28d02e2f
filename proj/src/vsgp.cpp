#include "trafficgp/vsgp.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "trafficgp/linalg.hpp"
#include "trafficgp/rng.hpp"
#include "trafficgp/sha256.hpp"

namespace trafficgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

void require_lane_consistency(const CoregionalizationSpec *coreg,
                              const InducingSet &inducing,
                              const ObservationSet &train) {
  if (coreg) {
    coreg->validate();
    if (train.lane.size() != static_cast<std::size_t>(train.n()) ||
        inducing.lane.size() != static_cast<std::size_t>(inducing.m()))
      throw DataError("vsgp: coregionalized model requires lane indices on "
                      "observations and inducing points");
  } else {
    if (train.has_lanes() || !inducing.lane.empty())
      throw DataError("vsgp: lane indices given without a coregionalization "
                      "spec");
  }
}

double trace_knn(const KernelSpec &spec, const CoregionalizationSpec *coreg,
                 const ObservationSet &train) {
  if (!coreg) return spec.variance * static_cast<double>(train.n());
  const Eigen::MatrixXd B = coreg->B();
  double tr = 0.0;
  for (int l : train.lane) tr += B(l - 1, l - 1);
  return spec.variance * tr;
}

} // namespace

InducingSet init_inducing(const SpatioTemporalGrid &grid, Eigen::Index n,
                          std::uint64_t seed) {
  grid.validate();
  if (n < 1) throw DataError("init_inducing: training size must be >= 1");
  const Eigen::Index m = std::max<Eigen::Index>(
      1, std::min<Eigen::Index>(
             static_cast<Eigen::Index>(std::ceil(0.02 * double(n))), 500));
  std::mt19937_64 rng(seed);
  InducingSet ind;
  ind.Z.resize(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    ind.Z(i, 0) = uniform(rng, 0.0, double(grid.S));
    ind.Z(i, 1) = uniform(rng, 0.0, double(grid.T));
  }
  return ind;
}

ElboResult elbo(const KernelSpec &spec, const CoregionalizationSpec *coreg,
                const InducingSet &inducing, const ObservationSet &train,
                bool with_gradients) {
  spec.validate();
  require_lane_consistency(coreg, inducing, train);
  const Eigen::Index n = train.n(), m = inducing.m();
  if (n < 1) throw DataError("elbo: empty training set");
  if (m > n)
    std::fprintf(stderr,
                 "vsgp: warning: more inducing points (%ld) than data (%ld)\n",
                 long(m), long(n));

  const double sigma2 = spec.noise_variance;
  const double sigma = std::sqrt(sigma2);

  GradRequest req;
  req.first_arg_coords = with_gradients;
  req.base_matrix = with_gradients && coreg != nullptr;

  const GramGradients Gmm = gram_gradients(spec, coreg, inducing.Z,
                                           inducing.lane, inducing.Z,
                                           inducing.lane, req);
  const GramGradients Gmn = gram_gradients(spec, coreg, inducing.Z,
                                           inducing.lane, train.X, train.lane,
                                           req);

  const JitteredCholesky jc =
      chol_with_jitter(Gmm.K, spec.variance, "vsgp elbo");
  const auto &L = jc.llt;

  // A = L^-1 K_mn / sigma;  B = I + A A^T
  Eigen::MatrixXd A = L.matrixL().solve(Gmn.K) / sigma;
  Eigen::MatrixXd Bmat = Eigen::MatrixXd::Identity(m, m) + A * A.transpose();
  Eigen::LLT<Eigen::MatrixXd> LB(Bmat);
  if (LB.info() != Eigen::Success)
    throw ConditioningError("vsgp elbo: inner factorization failed");

  const Eigen::VectorXd Ay = A * train.y;
  const Eigen::VectorXd cvec =
      LB.matrixL().solve(Ay) / sigma; // L_B^-1 A y / sigma

  const double tr_knn = trace_knn(spec, coreg, train);
  const double a_fro2 = A.squaredNorm();
  const double tr_kq = tr_knn - sigma2 * a_fro2; // tr(K_nn - Q_nn) >= 0

  ElboResult out;
  out.value = -0.5 * double(n) * kLog2Pi -
              LB.matrixLLT().diagonal().array().log().sum() -
              0.5 * double(n) * std::log(sigma2) -
              train.y.squaredNorm() / (2.0 * sigma2) +
              0.5 * cvec.squaredNorm() - tr_kq / (2.0 * sigma2);
  if (!with_gradients) return out;

  // Reverse-mode adjoints of the bound with respect to K_mn and K_mm:
  //   E_mn = (P b) b^T - P W^-1 + P / sigma2
  //   E_mm = -1/2 (P b)(P b)^T + 1/2 P W^-1 P^T - P P^T / (2 sigma2)
  // with P = K_mm^-1 K_mn, W = Q_nn + sigma2 I, b = W^-1 y; every product
  // stays m x n or smaller.
  const Eigen::VectorXd t = LB.matrixU().solve(cvec);          // L_B^-T c
  const Eigen::VectorXd beta = train.y / sigma2 - A.transpose() * t / sigma;
  const Eigen::MatrixXd P = L.matrixU().solve(A) * sigma;      // m x n
  const Eigen::VectorXd Pbeta = P * beta;
  const Eigen::MatrixXd LBinvA = LB.matrixL().solve(A);
  const Eigen::MatrixXd BinvA = LB.matrixU().solve(LBinvA);
  const Eigen::MatrixXd PWinv =
      (P - (P * A.transpose()) * BinvA) / sigma2;              // P W^-1
  const Eigen::MatrixXd Emn =
      Pbeta * beta.transpose() - PWinv + P / sigma2;
  Eigen::MatrixXd PWinvPt = PWinv * P.transpose();
  PWinvPt = 0.5 * (PWinvPt + PWinvPt.transpose());
  const Eigen::MatrixXd Emm = -0.5 * Pbeta * Pbeta.transpose() +
                              0.5 * PWinvPt -
                              P * P.transpose() / (2.0 * sigma2);
  const double ebar = -1.0 / (2.0 * sigma2); // adjoint of diag(K_nn) entries

  auto contract = [&](const Eigen::MatrixXd &dmn, const Eigen::MatrixXd &dmm) {
    return Emn.cwiseProduct(dmn).sum() + Emm.cwiseProduct(dmm).sum();
  };

  ElboGradients &g = out.grad;
  // The escalated jitter is level * variance, so it moves with log variance.
  Eigen::MatrixXd dmm_var = Gmm.d_log_variance;
  dmm_var.diagonal().array() += jc.jitter;
  g.d_log_variance = contract(Gmn.d_log_variance, dmm_var) + ebar * tr_knn;
  g.d_log_lengthscale_s =
      contract(Gmn.d_log_lengthscale_s, Gmm.d_log_lengthscale_s);
  g.d_log_lengthscale_t =
      contract(Gmn.d_log_lengthscale_t, Gmm.d_log_lengthscale_t);
  g.d_angle = contract(Gmn.d_angle, Gmm.d_angle);

  const double tr_winv = (double(n) - LBinvA.squaredNorm()) / sigma2;
  g.d_log_noise = sigma2 * (0.5 * beta.squaredNorm() - 0.5 * tr_winv) +
                  tr_kq / (2.0 * sigma2);

  g.dZ.resize(m, 2);
  const Eigen::MatrixXd mn_s = Emn.cwiseProduct(Gmn.dx_s);
  const Eigen::MatrixXd mn_t = Emn.cwiseProduct(Gmn.dx_t);
  const Eigen::MatrixXd mm_s = Emm.cwiseProduct(Gmm.dx_s);
  const Eigen::MatrixXd mm_t = Emm.cwiseProduct(Gmm.dx_t);
  for (Eigen::Index a = 0; a < m; ++a) {
    g.dZ(a, 0) = mn_s.row(a).sum() + 2.0 * mm_s.row(a).sum();
    g.dZ(a, 1) = mn_t.row(a).sum() + 2.0 * mm_t.row(a).sum();
  }

  if (coreg) {
    // dELBO/dA = (T + T^T) A with T the lane-blocked sum of adjoint * base.
    const int n_out = coreg->outputs;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n_out, n_out);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index i = 0; i < n; ++i)
        T(inducing.lane[a] - 1, train.lane[i] - 1) +=
            Emn(a, i) * Gmn.base(a, i);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b)
        T(inducing.lane[a] - 1, inducing.lane[b] - 1) +=
            Emm(a, b) * Gmm.base(a, b);
    for (Eigen::Index i = 0; i < n; ++i)
      T(train.lane[i] - 1, train.lane[i] - 1) += ebar * spec.variance;
    g.dA = (T + T.transpose()) * coreg->A;
  }
  return out;
}

namespace {

// Predictive cache: mean_z = L L_B^-T c and Lambda = L^-T B L^-1, both from
// the same factorization used by the bound.
void compute_cache(TrainedModel &model, const ObservationSet &train) {
  const KernelSpec &spec = model.kernel;
  const CoregionalizationSpec *coreg =
      model.coreg.has_value() ? &*model.coreg : nullptr;
  require_lane_consistency(coreg, model.inducing, train);
  const Eigen::Index m = model.inducing.m();
  const double sigma = std::sqrt(spec.noise_variance);

  const Eigen::MatrixXd Kmm = gram(spec, coreg, model.inducing.Z,
                                   model.inducing.lane, model.inducing.Z,
                                   model.inducing.lane);
  const Eigen::MatrixXd Kmn = gram(spec, coreg, model.inducing.Z,
                                   model.inducing.lane, train.X, train.lane);
  const JitteredCholesky jc = chol_with_jitter(Kmm, spec.variance, "vsgp fit");
  const Eigen::MatrixXd A = jc.llt.matrixL().solve(Kmn) / sigma;
  Eigen::MatrixXd Bmat =
      Eigen::MatrixXd::Identity(m, m) + A * A.transpose();
  Eigen::LLT<Eigen::MatrixXd> LB(Bmat);
  if (LB.info() != Eigen::Success)
    throw ConditioningError("vsgp fit: inner factorization failed");

  const Eigen::VectorXd cvec = LB.matrixL().solve(A * train.y) / sigma;
  const Eigen::MatrixXd Lmat = jc.llt.matrixL();
  model.mean_z = Lmat * LB.matrixU().solve(cvec);

  const Eigen::MatrixXd Linv =
      jc.llt.matrixL().solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::MatrixXd lambda = Linv.transpose() * Bmat * Linv;
  model.precision = 0.5 * (lambda + lambda.transpose());
  model.info.data_digest = observation_digest(train);
}

struct ParamPack {
  // layout: [log var, log ls, log lt, angle, log noise, Z(2m), A(L*r)]
  Eigen::VectorXd values;
  std::vector<bool> free;
  Eigen::Index m = 0;
  int coreg_rows = 0, coreg_cols = 0;

  static ParamPack from(const KernelSpec &spec,
                        const CoregionalizationSpec *coreg,
                        const InducingSet &ind, const OptimizerConfig &cfg) {
    ParamPack p;
    p.m = ind.m();
    const Eigen::Index na =
        coreg ? Eigen::Index(coreg->A.size()) : Eigen::Index(0);
    p.values.resize(5 + 2 * p.m + na);
    p.values[0] = std::log(spec.variance);
    p.values[1] = std::log(spec.lengthscale_s);
    p.values[2] = std::log(spec.lengthscale_t);
    p.values[3] = spec.angle;
    p.values[4] = std::log(spec.noise_variance);
    for (Eigen::Index i = 0; i < p.m; ++i) {
      p.values[5 + 2 * i] = ind.Z(i, 0);
      p.values[5 + 2 * i + 1] = ind.Z(i, 1);
    }
    if (coreg) {
      p.coreg_rows = coreg->outputs;
      p.coreg_cols = coreg->rank;
      for (int r = 0; r < p.coreg_rows; ++r)
        for (int c = 0; c < p.coreg_cols; ++c)
          p.values[5 + 2 * p.m + r * p.coreg_cols + c] = coreg->A(r, c);
    }
    p.free.assign(p.values.size(), false);
    const bool hyp = cfg.optimize_hyperparameters;
    p.free[0] = hyp;
    p.free[1] = hyp;
    p.free[2] = hyp;
    p.free[3] = hyp && cfg.optimize_angle;
    p.free[4] = hyp;
    for (Eigen::Index i = 0; i < 2 * p.m; ++i)
      p.free[5 + i] = cfg.optimize_inducing;
    for (Eigen::Index i = 5 + 2 * p.m; i < p.values.size(); ++i)
      p.free[i] = hyp && cfg.optimize_coregionalization;
    return p;
  }

  void unpack(KernelSpec &spec, CoregionalizationSpec *coreg,
              InducingSet &ind) const {
    spec.variance = std::exp(values[0]);
    spec.lengthscale_s = std::exp(values[1]);
    spec.lengthscale_t = std::exp(values[2]);
    spec.angle = values[3];
    spec.noise_variance = std::exp(values[4]);
    for (Eigen::Index i = 0; i < m; ++i) {
      ind.Z(i, 0) = values[5 + 2 * i];
      ind.Z(i, 1) = values[5 + 2 * i + 1];
    }
    if (coreg)
      for (int r = 0; r < coreg_rows; ++r)
        for (int c = 0; c < coreg_cols; ++c)
          coreg->A(r, c) = values[5 + 2 * m + r * coreg_cols + c];
  }

  Eigen::VectorXd flatten(const ElboGradients &g) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(values.size());
    v[0] = g.d_log_variance;
    v[1] = g.d_log_lengthscale_s;
    v[2] = g.d_log_lengthscale_t;
    v[3] = g.d_angle;
    v[4] = g.d_log_noise;
    for (Eigen::Index i = 0; i < m; ++i) {
      v[5 + 2 * i] = g.dZ(i, 0);
      v[5 + 2 * i + 1] = g.dZ(i, 1);
    }
    if (g.dA.size() > 0)
      for (int r = 0; r < coreg_rows; ++r)
        for (int c = 0; c < coreg_cols; ++c)
          v[5 + 2 * m + r * coreg_cols + c] = g.dA(r, c);
    return v;
  }
};

} // namespace

KernelSpec default_init_spec(const ObservationSet &train,
                             const SpatioTemporalGrid &grid) {
  if (train.n() < 1) throw DataError("default_init_spec: empty training set");
  const double mean = train.y.mean();
  double var =
      (train.y.array() - mean).square().sum() / double(train.n());
  var = std::max(var, 1e-6);
  KernelSpec spec;
  spec.family = KernelFamily::Matern52;
  spec.variance = var;
  spec.lengthscale_s = std::max(double(grid.S) / 10.0, 1e-2);
  spec.lengthscale_t = std::max(double(grid.T) / 10.0, 1e-2);
  spec.angle = 0.0;
  spec.noise_variance = 0.1 * var;
  return spec;
}

TrainedModel fit_with_inducing(const ObservationSet &train,
                               const SpatioTemporalGrid &grid,
                               InducingSet inducing, const KernelSpec &init,
                               const OptimizerConfig &config,
                               std::uint64_t seed,
                               const CoregionalizationSpec *coreg_init) {
  init.validate();
  if (train.n() < 1) throw DataError("fit: empty training set");

  TrainedModel model;
  model.kernel = init;
  if (coreg_init) model.coreg = *coreg_init;
  model.inducing = std::move(inducing);
  model.grid = grid;
  model.covariance_batch_cap = config.covariance_batch_cap;
  model.info.seed = seed;

  CoregionalizationSpec *coreg =
      model.coreg.has_value() ? &*model.coreg : nullptr;

  ParamPack pack = ParamPack::from(model.kernel, coreg, model.inducing,
                                   config);
  auto evaluate = [&](const Eigen::VectorXd &values, bool with_grad) {
    ParamPack p = pack;
    p.values = values;
    p.unpack(model.kernel, coreg, model.inducing);
    return elbo(model.kernel, coreg, model.inducing, train, with_grad);
  };

  ElboResult cur = evaluate(pack.values, true);
  if (!std::isfinite(cur.value))
    throw DataError("fit: ELBO not finite at the initial parameters");
  model.info.initial_elbo = cur.value;
  model.info.elbo_trace.push_back(cur.value);

  Eigen::VectorXd grad = pack.flatten(cur.grad);
  Eigen::VectorXd prev_sign = Eigen::VectorXd::Zero(pack.values.size());
  Eigen::VectorXd step(pack.values.size());
  for (Eigen::Index i = 0; i < step.size(); ++i)
    step[i] = (i >= 5 && i < 5 + 2 * pack.m) ? config.initial_step_inducing
                                             : config.initial_step;

  // generous boxes keep exp() finite when a lengthscale runs away along a
  // perfectly correlated direction
  const auto clamp_params = [](Eigen::VectorXd &v) {
    v[0] = std::clamp(v[0], -23.0, 23.0); // log variance
    v[1] = std::clamp(v[1], -10.0, 20.0); // log lengthscales
    v[2] = std::clamp(v[2], -10.0, 20.0);
    v[3] = std::clamp(v[3], -7.0, 7.0);   // angle (wrapped on report)
    v[4] = std::clamp(v[4], -23.0, 23.0); // log noise
  };

  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    Eigen::VectorXd proposal = pack.values;
    bool moved = false;
    for (Eigen::Index i = 0; i < proposal.size(); ++i) {
      if (!pack.free[i] || grad[i] == 0.0) continue;
      proposal[i] += (grad[i] > 0.0 ? step[i] : -step[i]);
      moved = true;
    }
    clamp_params(proposal);
    if (!moved) break;

    ElboResult next = evaluate(proposal, true);
    if (!std::isfinite(next.value) || next.value < cur.value) {
      // rejected: keep the current point, halve the steps
      step *= config.step_shrink;
      if (step.maxCoeff() < 1e-12) {
        model.info.diagnostic = std::isfinite(next.value)
                                    ? "step sizes collapsed"
                                    : "non-finite ELBO; kept last good "
                                      "parameters";
        break;
      }
      continue;
    }

    const Eigen::VectorXd new_grad = pack.flatten(next.grad);
    for (Eigen::Index i = 0; i < step.size(); ++i) {
      if (!pack.free[i]) continue;
      const double mx = (i >= 5 && i < 5 + 2 * pack.m)
                            ? config.max_step_inducing
                            : config.max_step;
      const double agree = new_grad[i] * prev_sign[i];
      if (agree > 0.0)
        step[i] = std::min(step[i] * config.step_grow, mx);
      else if (agree < 0.0)
        step[i] = std::max(step[i] * config.step_shrink, 1e-12);
    }
    pack.values = proposal;
    prev_sign = new_grad;
    grad = new_grad;
    cur = next;
    model.info.elbo_trace.push_back(cur.value);

    const auto &trace = model.info.elbo_trace;
    if (static_cast<int>(trace.size()) > config.tolerance_window) {
      const double then = trace[trace.size() - 1 - config.tolerance_window];
      const double scale = std::max(1.0, std::abs(cur.value));
      if (cur.value - then < config.relative_tolerance * scale) {
        ++iter;
        break;
      }
    }
  }

  pack.unpack(model.kernel, coreg, model.inducing);
  if (config.optimize_hyperparameters && config.optimize_angle)
    model.kernel = model.kernel.canonical();
  model.info.iterations = iter;
  model.info.final_elbo = cur.value;
  compute_cache(model, train);
  return model;
}

TrainedModel fit(const ObservationSet &train, const SpatioTemporalGrid &grid,
                 const KernelSpec &init, const OptimizerConfig &config,
                 std::uint64_t seed, const CoregionalizationSpec *coreg_init) {
  InducingSet ind = init_inducing(grid, train.n(), seed);
  if (coreg_init) {
    // single-grid init path gives every inducing point lane 1; the
    // multi-lane front end uses fit_with_inducing with a per-lane split.
    ind.lane.assign(static_cast<std::size_t>(ind.m()), 1);
  }
  return fit_with_inducing(train, grid, std::move(ind), init, config, seed,
                           coreg_init);
}

TrainedModel fit_pretrained(const ObservationSet &train,
                            const SpatioTemporalGrid &grid,
                            const KernelSpec &pretrained, std::uint64_t seed,
                            const CoregionalizationSpec *coreg,
                            const OptimizerConfig &config) {
  pretrained.validate();
  if (train.n() < 1) throw DataError("fit_pretrained: empty training set");

  TrainedModel model;
  model.kernel = pretrained;
  if (coreg) model.coreg = *coreg;
  model.inducing = init_inducing(grid, train.n(), seed);
  if (coreg) model.inducing.lane.assign(size_t(model.inducing.m()), 1);
  model.grid = grid;
  model.covariance_batch_cap = config.covariance_batch_cap;
  model.info.seed = seed;
  model.info.iterations = 0;
  const ElboResult at = elbo(model.kernel,
                             model.coreg ? &*model.coreg : nullptr,
                             model.inducing, train, false);
  model.info.initial_elbo = at.value;
  model.info.final_elbo = at.value;
  model.info.elbo_trace.push_back(at.value);
  compute_cache(model, train);
  return model;
}

Posterior predict(const TrainedModel &model, const Eigen::MatrixX2d &Xq,
                  const std::vector<int> &lanes,
                  bool include_noise_variance) {
  const KernelSpec &spec = model.kernel;
  const CoregionalizationSpec *coreg =
      model.coreg.has_value() ? &*model.coreg : nullptr;
  if (coreg && lanes.size() != static_cast<std::size_t>(Xq.rows()))
    throw DataError("predict: coregionalized model requires query lanes");

  Posterior post;
  const Eigen::Index q = Xq.rows();
  if (q == 0) {
    post.mean.resize(0);
    post.covariance.resize(0, 0);
    return post;
  }

  bool outside = false;
  for (Eigen::Index i = 0; i < q && !outside; ++i)
    outside = Xq(i, 0) < 0.0 || Xq(i, 0) > double(model.grid.S) ||
              Xq(i, 1) < 0.0 || Xq(i, 1) > double(model.grid.T);
  if (outside)
    std::fprintf(stderr,
                 "vsgp: warning: query outside the grid (extrapolating)\n");

  const Eigen::Index m = model.inducing.m();
  const Eigen::MatrixXd Kmm = gram(spec, coreg, model.inducing.Z,
                                   model.inducing.lane, model.inducing.Z,
                                   model.inducing.lane);
  const JitteredCholesky jc =
      chol_with_jitter(Kmm, spec.variance, "vsgp predict");
  const Eigen::MatrixXd Lmat = jc.llt.matrixL();
  Eigen::MatrixXd Bmat = Lmat.transpose() * model.precision * Lmat;
  Bmat = 0.5 * (Bmat + Bmat.transpose());
  Eigen::LLT<Eigen::MatrixXd> LB(Bmat);
  if (LB.info() != Eigen::Success)
    throw ConditioningError("vsgp predict: cached precision not SPD");

  const Eigen::VectorXd u = jc.llt.solve(model.mean_z); // K_mm^-1 fbar_z

  post.mean.resize(q);
  const bool full = q <= model.covariance_batch_cap;
  post.diagonal_only = !full;
  if (full)
    post.covariance.resize(q, q);
  else
    post.covariance.resize(q, 1);

  const Eigen::Index chunk = full ? q : std::min<Eigen::Index>(q, 4096);
  for (Eigen::Index start = 0; start < q; start += chunk) {
    const Eigen::Index len = std::min(chunk, q - start);
    const Eigen::MatrixX2d Xb = Xq.middleRows(start, len);
    std::vector<int> lb;
    if (coreg)
      lb.assign(lanes.begin() + start, lanes.begin() + start + len);
    const Eigen::MatrixXd Kmq =
        gram(spec, coreg, model.inducing.Z, model.inducing.lane, Xb, lb);
    post.mean.segment(start, len) = Kmq.transpose() * u;

    const Eigen::MatrixXd tmp1 = jc.llt.matrixL().solve(Kmq);
    const Eigen::MatrixXd tmp2 = LB.matrixL().solve(tmp1);
    if (full) {
      post.covariance = gram(spec, coreg, Xb, lb, Xb, lb) -
                        tmp1.transpose() * tmp1 + tmp2.transpose() * tmp2;
      if (include_noise_variance)
        post.covariance.diagonal().array() += spec.noise_variance;
      post.covariance.diagonal() = post.covariance.diagonal().cwiseMax(0.0);
    } else {
      for (Eigen::Index i = 0; i < len; ++i) {
        double prior = spec.variance;
        if (coreg) {
          const Eigen::MatrixXd B = coreg->B();
          prior *= B(lb[i] - 1, lb[i] - 1);
        }
        double v = prior - tmp1.col(i).squaredNorm() +
                   tmp2.col(i).squaredNorm();
        if (include_noise_variance) v += spec.noise_variance;
        post.covariance(start + i, 0) = std::max(v, 0.0);
      }
    }
  }
  return post;
}

std::string observation_digest(const ObservationSet &obs) {
  Sha256 h;
  auto add = [&h](const void *p, std::size_t len) { h.update(p, len); };
  const Eigen::Index n = obs.n();
  add(&n, sizeof(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row[3] = {obs.X(i, 0), obs.X(i, 1), obs.y(i)};
    add(row, sizeof(row));
  }
  for (int l : obs.lane) add(&l, sizeof(l));
  return h.hex_digest();
}

} // namespace trafficgp
