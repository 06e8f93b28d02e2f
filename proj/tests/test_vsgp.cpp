#include <doctest.h>

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "trafficgp/gp_exact.hpp"
#include "trafficgp/io.hpp"
#include "trafficgp/vsgp.hpp"

using namespace trafficgp;

namespace {

SpatioTemporalGrid test_grid(int S = 20, int T = 30) {
  SpatioTemporalGrid g;
  g.S = S;
  g.T = T;
  return g;
}

// easy smooth target so short fits make visible progress
ObservationSet smooth_obs(std::mt19937_64 &rng, Eigen::Index n) {
  ObservationSet obs = oracles::random_obs(rng, n);
  for (Eigen::Index i = 0; i < n; ++i)
    obs.y(i) = std::sin(obs.X(i, 0) / 4.0) + 0.5 * std::cos(obs.X(i, 1) / 5.0)
               + 0.1 * normal(rng);
  return obs;
}

} // namespace

TEST_CASE("inducing point count follows the 2 percent rule") {
  const SpatioTemporalGrid g = test_grid();
  CHECK(init_inducing(g, 100, 1).m() == 2);
  CHECK(init_inducing(g, 100000, 1).m() == 500);
  CHECK(init_inducing(g, 1, 1).m() == 1);
  CHECK(init_inducing(g, 49, 1).m() == 1);
  CHECK(init_inducing(g, 51, 1).m() == 2);

  const InducingSet a = init_inducing(g, 500, 42);
  const InducingSet b = init_inducing(g, 500, 42);
  CHECK(a.Z == b.Z);
  for (Eigen::Index i = 0; i < a.m(); ++i) {
    CHECK(a.Z(i, 0) >= 0.0);
    CHECK(a.Z(i, 0) < g.S);
    CHECK(a.Z(i, 1) >= 0.0);
    CHECK(a.Z(i, 1) < g.T);
  }
}

TEST_CASE("collapse to the exact GP when Z equals the training inputs") {
  std::mt19937_64 rng(101);
  const KernelSpec spec = oracles::random_spec(rng, false); // Matern52
  const ObservationSet train = oracles::random_obs(rng, 30);

  InducingSet ind;
  ind.Z = train.X;

  const ElboResult bound = elbo(spec, nullptr, ind, train);
  const double lml = log_marginal_likelihood(spec, train);
  CHECK(std::abs(bound.value - lml) < 1e-6);

  // predictions match the exact posterior mean
  TrainedModel model;
  model.kernel = spec;
  model.inducing = ind;
  model.grid = test_grid();
  const OptimizerConfig frozen{.optimize_hyperparameters = false,
                               .optimize_inducing = false};
  model = fit_with_inducing(train, model.grid, ind, spec, frozen, 0, nullptr);

  const ObservationSet queries = oracles::random_obs(rng, 12);
  const Posterior sparse = predict(model, queries.X);
  const Posterior exact = posterior(spec, train, queries.X);
  for (int i = 0; i < 12; ++i)
    CHECK(std::abs(sparse.mean(i) - exact.mean(i)) < 1e-6);
}

TEST_CASE("the bound never exceeds the exact marginal likelihood") {
  std::mt19937_64 rng(103);
  int draws = 0;
  for (int rep = 0; rep < 220; ++rep) {
    const KernelSpec spec = oracles::random_spec(rng);
    const Eigen::Index n = 10 + Eigen::Index(uniform_index(rng, 51));
    const Eigen::Index m = 1 + Eigen::Index(uniform_index(rng, 12));
    const ObservationSet train = oracles::random_obs(rng, n);
    const InducingSet ind = oracles::random_inducing(rng, m);

    const double bound = elbo(spec, nullptr, ind, train, false).value;
    const double lml = log_marginal_likelihood(spec, train);
    CHECK(bound <= lml + 1e-6);
    ++draws;
  }
  CHECK(draws >= 200);
}

TEST_CASE("trace regularizer is nonpositive (K - Q is PSD)") {
  std::mt19937_64 rng(107);
  for (int rep = 0; rep < 40; ++rep) {
    const KernelSpec spec = oracles::random_spec(rng);
    const ObservationSet train = oracles::random_obs(rng, 20);
    const InducingSet ind = oracles::random_inducing(rng, 5);

    Eigen::MatrixXd Kmm = gram(spec, ind.Z, ind.Z);
    const Eigen::MatrixXd Kmn = gram(spec, ind.Z, train.X);
    const Eigen::MatrixXd Knn = gram(spec, train.X, train.X);
    const Eigen::MatrixXd Q = Kmn.transpose() * Kmm.inverse() * Kmn;
    CHECK((Knn - Q).trace() >= -1e-8 * spec.variance);
  }
}

TEST_CASE("elbo agrees with the literal dense formula") {
  std::mt19937_64 rng(109);
  for (int rep = 0; rep < 10; ++rep) {
    const KernelSpec spec = oracles::random_spec(rng);
    const ObservationSet train = oracles::random_obs(rng, 30);
    const InducingSet ind = oracles::random_inducing(rng, 5);

    const double fast = elbo(spec, nullptr, ind, train, false).value;
    const double dense = oracles::dense_elbo(spec, nullptr, ind, train);
    CHECK(oracles::rel_close(fast, dense, 1e-8));
  }
}

TEST_CASE("elbo gradients match finite differences on every parameter") {
  std::mt19937_64 rng(113);
  int draws = 0;
  for (int rep = 0; rep < 110; ++rep) {
    const bool with_coreg = rep % 3 == 0;
    KernelSpec spec = oracles::random_spec(rng);
    const Eigen::Index n = 12 + Eigen::Index(uniform_index(rng, 14));
    const Eigen::Index m = 2 + Eigen::Index(uniform_index(rng, 5));
    ObservationSet train = oracles::random_obs(rng, n);
    InducingSet ind = oracles::random_inducing(rng, m);

    CoregionalizationSpec coreg;
    const CoregionalizationSpec *cptr = nullptr;
    if (with_coreg) {
      coreg.outputs = 2;
      coreg.rank = 2;
      coreg.A.resize(2, 2);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          coreg.A(r, c) = normal(rng) * 0.5 + (r == c ? 1.0 : 0.0);
      cptr = &coreg;
      for (Eigen::Index i = 0; i < n; ++i)
        train.lane.push_back(1 + int(uniform_index(rng, 2)));
      for (Eigen::Index i = 0; i < m; ++i)
        ind.lane.push_back(1 + int(uniform_index(rng, 2)));
    }

    const ElboResult res = elbo(spec, cptr, ind, train);

    auto value_at = [&](const KernelSpec &s, const InducingSet &z,
                        const CoregionalizationSpec *c) {
      return elbo(s, c, z, train, false).value;
    };

    const double fd_var = oracles::central_diff(
        [&](double h) {
          KernelSpec s = spec;
          s.variance = std::exp(std::log(spec.variance) + h);
          return value_at(s, ind, cptr);
        },
        0.0);
    CHECK(oracles::rel_close(res.grad.d_log_variance, fd_var));

    const double fd_ls = oracles::central_diff(
        [&](double h) {
          KernelSpec s = spec;
          s.lengthscale_s = std::exp(std::log(spec.lengthscale_s) + h);
          return value_at(s, ind, cptr);
        },
        0.0);
    CHECK(oracles::rel_close(res.grad.d_log_lengthscale_s, fd_ls));

    const double fd_lt = oracles::central_diff(
        [&](double h) {
          KernelSpec s = spec;
          s.lengthscale_t = std::exp(std::log(spec.lengthscale_t) + h);
          return value_at(s, ind, cptr);
        },
        0.0);
    CHECK(oracles::rel_close(res.grad.d_log_lengthscale_t, fd_lt));

    const double fd_angle = oracles::central_diff(
        [&](double h) {
          KernelSpec s = spec;
          s.angle = spec.angle + h;
          return value_at(s, ind, cptr);
        },
        0.0);
    CHECK(oracles::rel_close(res.grad.d_angle, fd_angle));

    const double fd_noise = oracles::central_diff(
        [&](double h) {
          KernelSpec s = spec;
          s.noise_variance = std::exp(std::log(spec.noise_variance) + h);
          return value_at(s, ind, cptr);
        },
        0.0);
    CHECK(oracles::rel_close(res.grad.d_log_noise, fd_noise));

    // a few inducing coordinates
    for (Eigen::Index a : {Eigen::Index(0), m - 1}) {
      for (int axis = 0; axis < 2; ++axis) {
        const double fd_z = oracles::central_diff(
            [&](double h) {
              InducingSet z = ind;
              z.Z(a, axis) += h;
              return value_at(spec, z, cptr);
            },
            0.0);
        CHECK(oracles::rel_close(res.grad.dZ(a, axis), fd_z));
      }
    }

    if (with_coreg) {
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          const double fd_a = oracles::central_diff(
              [&](double h) {
                CoregionalizationSpec cc = coreg;
                cc.A(r, c) += h;
                return value_at(spec, ind, &cc);
              },
              0.0);
          CHECK(oracles::rel_close(res.grad.dA(r, c), fd_a));
        }
    }
    ++draws;
  }
  CHECK(draws >= 100);
}

TEST_CASE("fit improves the bound monotonically and is deterministic") {
  std::mt19937_64 rng(127);
  const ObservationSet train = smooth_obs(rng, 120);
  const SpatioTemporalGrid grid = test_grid();

  OptimizerConfig cfg;
  cfg.max_iterations = 150;

  const KernelSpec init = default_init_spec(train, grid);
  const TrainedModel m1 = fit(train, grid, init, cfg, 7);
  const TrainedModel m2 = fit(train, grid, init, cfg, 7);

  CHECK(m1.info.final_elbo >= m1.info.initial_elbo);
  for (std::size_t i = 1; i < m1.info.elbo_trace.size(); ++i)
    CHECK(m1.info.elbo_trace[i] >= m1.info.elbo_trace[i - 1]);

  // byte-identical serialization for identical seeds
  CHECK(model_to_json(m1).dump() == model_to_json(m2).dump());

  // the optimizer should noticeably beat the initial bound here
  CHECK(m1.info.final_elbo > m1.info.initial_elbo + 1.0);
}

TEST_CASE("pretrained mode skips optimization and reuses hyperparameters") {
  std::mt19937_64 rng(131);
  const ObservationSet train = smooth_obs(rng, 400);
  const SpatioTemporalGrid grid = test_grid();

  OptimizerConfig cfg;
  cfg.max_iterations = 120;
  const KernelSpec init = default_init_spec(train, grid);

  const auto t0 = std::chrono::steady_clock::now();
  const TrainedModel full = fit(train, grid, init, cfg, 3);
  const double fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const auto t1 = std::chrono::steady_clock::now();
  const TrainedModel pre = fit_pretrained(train, grid, full.kernel, 3);
  const double pre_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1)
          .count();

  CHECK(pre.info.iterations == 0);
  CHECK(pre_seconds < fit_seconds);

  // rebuilding the cache at the fitted parameters and inducing locations
  // reproduces the full model's predictions
  const OptimizerConfig frozen{.optimize_hyperparameters = false,
                               .optimize_inducing = false};
  const TrainedModel rebuilt = fit_with_inducing(
      train, grid, full.inducing, full.kernel, frozen, 99, nullptr);
  const ObservationSet queries = oracles::random_obs(rng, 10);
  const Posterior a = predict(full, queries.X);
  const Posterior b = predict(rebuilt, queries.X);
  for (int i = 0; i < 10; ++i)
    CHECK(a.mean(i) == doctest::Approx(b.mean(i)).epsilon(1e-10));

  // degenerate size: a single inducing point still works
  const ObservationSet tiny = smooth_obs(rng, 40);
  const TrainedModel one = fit_pretrained(tiny, grid, init, 5);
  CHECK(one.inducing.m() == 1);
  const Posterior p = predict(one, queries.X);
  CHECK(p.mean.allFinite());
}

TEST_CASE("predict semantics") {
  std::mt19937_64 rng(137);
  const ObservationSet train = smooth_obs(rng, 80);
  const SpatioTemporalGrid grid = test_grid();
  OptimizerConfig cfg;
  cfg.max_iterations = 60;
  const TrainedModel model =
      fit(train, grid, default_init_spec(train, grid), cfg, 11);

  SUBCASE("mean is invariant under training permutation") {
    ObservationSet rev = train;
    for (Eigen::Index i = 0; i < train.n(); ++i) {
      rev.X.row(i) = train.X.row(train.n() - 1 - i);
      rev.y(i) = train.y(train.n() - 1 - i);
    }
    const OptimizerConfig frozen{.optimize_hyperparameters = false,
                                 .optimize_inducing = false};
    const TrainedModel a = fit_with_inducing(train, grid, model.inducing,
                                             model.kernel, frozen, 0, nullptr);
    const TrainedModel b = fit_with_inducing(rev, grid, model.inducing,
                                             model.kernel, frozen, 0, nullptr);
    const ObservationSet queries = oracles::random_obs(rng, 9);
    const Posterior pa = predict(a, queries.X);
    const Posterior pb = predict(b, queries.X);
    for (int i = 0; i < 9; ++i)
      CHECK(pa.mean(i) == doctest::Approx(pb.mean(i)).epsilon(1e-9));
  }

  SUBCASE("outside-grid queries extrapolate without error") {
    Eigen::MatrixX2d far(1, 2);
    far << 500.0, 700.0;
    const Posterior p = predict(model, far);
    CHECK(std::isfinite(p.mean(0)));
    CHECK(p.variance()(0) >= 0.0);
  }

  SUBCASE("diagonal-only beyond the covariance cap") {
    TrainedModel capped = model;
    capped.covariance_batch_cap = 16;
    const ObservationSet queries = oracles::random_obs(rng, 20);
    const Posterior p = predict(capped, queries.X);
    CHECK(p.diagonal_only);
    CHECK(p.covariance.cols() == 1);
    CHECK(p.variance().minCoeff() >= 0.0);

    const Posterior full = predict(model, queries.X);
    CHECK(!full.diagonal_only);
    for (int i = 0; i < 20; ++i)
      CHECK(p.variance()(i) ==
            doctest::Approx(full.covariance(i, i)).epsilon(1e-9));
  }

  SUBCASE("y-variance adds the noise term") {
    const ObservationSet queries = oracles::random_obs(rng, 5);
    const Posterior f = predict(model, queries.X, {}, false);
    const Posterior y = predict(model, queries.X, {}, true);
    for (int i = 0; i < 5; ++i)
      CHECK(y.variance()(i) == doctest::Approx(f.variance()(i) +
                                               model.kernel.noise_variance));
  }
}

TEST_CASE("model serialization round-trips bit-faithfully") {
  std::mt19937_64 rng(139);
  const ObservationSet train = smooth_obs(rng, 60);
  const SpatioTemporalGrid grid = test_grid();
  OptimizerConfig cfg;
  cfg.max_iterations = 40;
  const TrainedModel model =
      fit(train, grid, default_init_spec(train, grid), cfg, 13);

  const Json j = model_to_json(model);
  const TrainedModel back = model_from_json(j);
  CHECK(model_to_json(back).dump() == j.dump());

  const ObservationSet queries = oracles::random_obs(rng, 8);
  const Posterior a = predict(model, queries.X);
  const Posterior b = predict(back, queries.X);
  for (int i = 0; i < 8; ++i) {
    CHECK(a.mean(i) == b.mean(i));
    CHECK(a.variance()(i) == b.variance()(i));
  }
}

TEST_CASE("non-finite initial parameters are rejected") {
  std::mt19937_64 rng(149);
  const ObservationSet train = smooth_obs(rng, 20);
  KernelSpec bad = default_init_spec(train, test_grid());
  bad.variance = -1.0;
  OptimizerConfig cfg;
  CHECK_THROWS_AS(fit(train, test_grid(), bad, cfg, 1), DataError);
}
