#include "trafficgp/multilane.hpp"

#include <cmath>
#include <numeric>

#include "trafficgp/rng.hpp"

namespace trafficgp {

void MultiLaneProblem::validate() const {
  grid.validate();
  coreg.validate();
  if (lanes.empty()) throw DataError("multilane: no lanes");
  if (static_cast<int>(lanes.size()) != coreg.outputs)
    throw DataError("multilane: lane count does not match coregionalization "
                    "outputs");
  for (const auto &l : lanes)
    if (l.has_lanes())
      throw DataError("multilane: per-lane sets must not carry lane tags");
}

ObservationSet stack_heterotopic(const MultiLaneProblem &problem) {
  problem.validate();
  Eigen::Index total = 0;
  for (const auto &l : problem.lanes) total += l.n();
  if (total < 1) throw DataError("stack_heterotopic: no observations");

  ObservationSet out;
  out.X.resize(total, 2);
  out.y.resize(total);
  out.lane.reserve(static_cast<std::size_t>(total));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < problem.lanes.size(); ++l) {
    const auto &obs = problem.lanes[l];
    out.X.middleRows(at, obs.n()) = obs.X;
    out.y.segment(at, obs.n()) = obs.y;
    out.lane.insert(out.lane.end(), static_cast<std::size_t>(obs.n()),
                    static_cast<int>(l) + 1);
    at += obs.n();
  }
  if (problem.lanes.size() == 1) out.lane.clear(); // single-output
  return out;
}

TrainedModel fit_joint(const MultiLaneProblem &problem, const KernelSpec &init,
                       const OptimizerConfig &config, std::uint64_t seed) {
  problem.validate();
  ObservationSet stacked = stack_heterotopic(problem);
  if (problem.lanes.size() == 1) {
    // degenerate case: plain single-output fit
    return fit(stacked, problem.grid, init, config, seed);
  }

  const Eigen::Index n = stacked.n();
  const Eigen::Index m = std::max<Eigen::Index>(
      1, std::min<Eigen::Index>(
             static_cast<Eigen::Index>(
                 std::ceil(config.inducing_fraction * double(n))),
             config.max_inducing));

  // proportional allocation with largest remainders
  const std::size_t L = problem.lanes.size();
  std::vector<Eigen::Index> alloc(L, 0);
  std::vector<std::pair<double, std::size_t>> rem;
  Eigen::Index used = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const double share = double(m) * double(problem.lanes[l].n()) / double(n);
    alloc[l] = static_cast<Eigen::Index>(std::floor(share));
    used += alloc[l];
    rem.push_back({share - std::floor(share), l});
  }
  std::sort(rem.begin(), rem.end(), [](const auto &a, const auto &b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t k = 0; used < m && k < rem.size(); ++k, ++used)
    alloc[rem[k].second] += 1;

  InducingSet ind;
  ind.Z.resize(m, 2);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < L; ++l) {
    std::mt19937_64 rng(derive_seed(seed, l + 1));
    for (Eigen::Index i = 0; i < alloc[l]; ++i, ++at) {
      ind.Z(at, 0) = uniform(rng, 0.0, double(problem.grid.S));
      ind.Z(at, 1) = uniform(rng, 0.0, double(problem.grid.T));
      ind.lane.push_back(static_cast<int>(l) + 1);
    }
  }

  return fit_with_inducing(stacked, problem.grid, std::move(ind), init,
                           config, seed, &problem.coreg);
}

JointPrediction predict_joint(const TrainedModel &model,
                              const SpatioTemporalGrid &grid) {
  grid.validate();
  const int L = model.coreg.has_value() ? model.coreg->outputs : 1;
  if (grid.L != L)
    throw DataError("predict_joint: grid lane count does not match the "
                    "model's outputs");

  Eigen::MatrixX2d Xq(grid.S * grid.T, 2);
  Eigen::Index k = 0;
  for (int i = 0; i < grid.S; ++i)
    for (int j = 0; j < grid.T; ++j, ++k) {
      Xq(k, 0) = i + 0.5;
      Xq(k, 1) = j + 0.5;
    }

  JointPrediction out{SpeedField(grid), SpeedField(grid)};
  for (int l = 1; l <= L; ++l) {
    std::vector<int> lanes;
    if (model.coreg.has_value())
      lanes.assign(static_cast<std::size_t>(Xq.rows()), l);
    const Posterior post = predict(model, Xq, lanes, true);
    const Eigen::VectorXd var = post.variance();
    k = 0;
    for (int i = 0; i < grid.S; ++i)
      for (int j = 0; j < grid.T; ++j, ++k) {
        out.estimate.set(l, i, j, post.mean(k), 1);
        out.variance.set(l, i, j, var(k), 1);
      }
  }
  return out;
}

} // namespace trafficgp
