#include "trafficgp/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace trafficgp {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Json grid_to_json(const SpatioTemporalGrid &grid) {
  return Json{{"ds", grid.ds},   {"dt", grid.dt},
              {"S", grid.S},     {"T", grid.T},
              {"L", grid.L},     {"s_origin", grid.s_origin},
              {"t_origin", grid.t_origin}};
}

SpatioTemporalGrid grid_from_json(const Json &j) {
  SpatioTemporalGrid g;
  g.ds = j.at("ds").get<double>();
  g.dt = j.at("dt").get<double>();
  g.S = j.at("S").get<int>();
  g.T = j.at("T").get<int>();
  g.L = j.at("L").get<int>();
  g.s_origin = j.value("s_origin", 0.0);
  g.t_origin = j.value("t_origin", 0.0);
  g.validate();
  return g;
}

void write_speed_field_csv(const SpeedField &field, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write speed field: " + path);
  out << "lane,space_index,time_index,speed,count\n";
  const auto &g = field.grid;
  for (int l = 1; l <= g.L; ++l)
    for (int i = 0; i < g.S; ++i)
      for (int j = 0; j < g.T; ++j)
        if (field.present(l, i, j))
          out << l << ',' << i << ',' << j << ','
              << format_double(field.value(l, i, j)) << ','
              << field.count(l, i, j) << '\n';
}

void write_grid_sidecar(const SpatioTemporalGrid &grid,
                        const std::string &path) {
  save_json_file(grid_to_json(grid), path);
}

SpeedField read_speed_field_csv(const std::string &csv_path,
                                const std::string &sidecar_path) {
  const SpatioTemporalGrid grid = grid_from_json(load_json_file(sidecar_path));
  SpeedField field(grid);

  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open speed field: " + csv_path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("speed field CSV: missing header");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    int l, i, j, c;
    double v;
    char comma;
    if (!(ss >> l >> comma >> i >> comma >> j >> comma >> v >> comma >> c))
      throw DataError("speed field CSV row " + std::to_string(row) +
                      ": malformed");
    if (l < 1 || l > grid.L || i < 0 || i >= grid.S || j < 0 || j >= grid.T)
      throw DataError("speed field CSV row " + std::to_string(row) +
                      ": index outside grid");
    field.set(l, i, j, v, c);
  }
  return field;
}

Json kernel_spec_to_json(const KernelSpec &spec,
                         const CoregionalizationSpec *coreg) {
  Json j{{"family", kernel_family_to_string(spec.family)},
         {"variance", spec.variance},
         {"lengthscale_s", spec.lengthscale_s},
         {"lengthscale_t", spec.lengthscale_t},
         {"angle", spec.wrapped_angle()},
         {"noise_variance", spec.noise_variance}};
  if (coreg) {
    Json a = Json::array();
    for (int r = 0; r < coreg->outputs; ++r)
      for (int c = 0; c < coreg->rank; ++c) a.push_back(coreg->A(r, c));
    j["coregionalization"] = Json{{"outputs", coreg->outputs},
                                  {"rank", coreg->rank},
                                  {"A", a}};
  }
  return j;
}

KernelSpec kernel_spec_from_json(const Json &j,
                                 std::optional<CoregionalizationSpec> *coreg) {
  KernelSpec spec;
  spec.family = kernel_family_from_string(j.at("family").get<std::string>());
  spec.variance = j.at("variance").get<double>();
  spec.lengthscale_s = j.at("lengthscale_s").get<double>();
  spec.lengthscale_t = j.at("lengthscale_t").get<double>();
  spec.angle = j.at("angle").get<double>();
  spec.noise_variance = j.at("noise_variance").get<double>();
  spec.validate();
  if (coreg) {
    coreg->reset();
    if (j.contains("coregionalization")) {
      const Json &cj = j.at("coregionalization");
      CoregionalizationSpec c;
      c.outputs = cj.at("outputs").get<int>();
      c.rank = cj.at("rank").get<int>();
      const auto &a = cj.at("A");
      if (static_cast<int>(a.size()) != c.outputs * c.rank)
        throw DataError("coregionalization: A has wrong length");
      c.A.resize(c.outputs, c.rank);
      int k = 0;
      for (int r = 0; r < c.outputs; ++r)
        for (int col = 0; col < c.rank; ++col) c.A(r, col) = a[k++];
      c.validate();
      *coreg = std::move(c);
    }
  }
  return spec;
}

Json model_to_json(const TrainedModel &model) {
  Json j;
  j["kernel"] = kernel_spec_to_json(
      model.kernel, model.coreg.has_value() ? &*model.coreg : nullptr);
  Json z = Json::array();
  for (Eigen::Index i = 0; i < model.inducing.m(); ++i)
    z.push_back(Json::array({model.inducing.Z(i, 0), model.inducing.Z(i, 1)}));
  j["inducing"] = Json{{"Z", z}};
  if (!model.inducing.lane.empty()) j["inducing"]["lane"] = model.inducing.lane;
  j["grid"] = grid_to_json(model.grid);

  Json mean = Json::array();
  for (Eigen::Index i = 0; i < model.mean_z.size(); ++i)
    mean.push_back(model.mean_z(i));
  Json prec = Json::array(); // row-major
  for (Eigen::Index r = 0; r < model.precision.rows(); ++r)
    for (Eigen::Index c = 0; c < model.precision.cols(); ++c)
      prec.push_back(model.precision(r, c));
  j["cache"] = Json{{"mean_z", mean}, {"precision", prec}};

  j["metadata"] = Json{{"iterations", model.info.iterations},
                       {"initial_elbo", model.info.initial_elbo},
                       {"final_elbo", model.info.final_elbo},
                       {"seed", model.info.seed},
                       {"data_digest", model.info.data_digest},
                       {"elbo_trace", model.info.elbo_trace},
                       {"diagnostic", model.info.diagnostic}};
  j["covariance_batch_cap"] = model.covariance_batch_cap;
  return j;
}

TrainedModel model_from_json(const Json &j) {
  TrainedModel model;
  std::optional<CoregionalizationSpec> coreg;
  model.kernel = kernel_spec_from_json(j.at("kernel"), &coreg);
  model.coreg = std::move(coreg);

  const auto &z = j.at("inducing").at("Z");
  model.inducing.Z.resize(static_cast<Eigen::Index>(z.size()), 2);
  for (std::size_t i = 0; i < z.size(); ++i) {
    model.inducing.Z(static_cast<Eigen::Index>(i), 0) = z[i][0].get<double>();
    model.inducing.Z(static_cast<Eigen::Index>(i), 1) = z[i][1].get<double>();
  }
  if (j.at("inducing").contains("lane"))
    model.inducing.lane =
        j.at("inducing").at("lane").get<std::vector<int>>();
  model.grid = grid_from_json(j.at("grid"));

  const Eigen::Index m = model.inducing.m();
  const auto &mean = j.at("cache").at("mean_z");
  if (static_cast<Eigen::Index>(mean.size()) != m)
    throw DataError("model cache: mean_z size mismatch");
  model.mean_z.resize(m);
  for (Eigen::Index i = 0; i < m; ++i)
    model.mean_z(i) = mean[static_cast<std::size_t>(i)].get<double>();
  const auto &prec = j.at("cache").at("precision");
  if (static_cast<Eigen::Index>(prec.size()) != m * m)
    throw DataError("model cache: precision size mismatch");
  model.precision.resize(m, m);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) model.precision(r, c) = prec[k++];

  const auto &meta = j.at("metadata");
  model.info.iterations = meta.at("iterations").get<int>();
  model.info.initial_elbo = meta.at("initial_elbo").get<double>();
  model.info.final_elbo = meta.at("final_elbo").get<double>();
  model.info.seed = meta.at("seed").get<std::uint64_t>();
  model.info.data_digest = meta.at("data_digest").get<std::string>();
  model.info.elbo_trace = meta.at("elbo_trace").get<std::vector<double>>();
  model.info.diagnostic = meta.at("diagnostic").get<std::string>();
  model.covariance_batch_cap = j.value("covariance_batch_cap", 4096);
  return model;
}

void save_model(const TrainedModel &model, const std::string &path) {
  save_json_file(model_to_json(model), path);
}

TrainedModel load_model(const std::string &path) {
  return model_from_json(load_json_file(path));
}

void write_matrix_csv(const Eigen::MatrixXd &mat, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write matrix: " + path);
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      if (c) out << ',';
      out << format_double(mat(r, c));
    }
    out << '\n';
  }
}

void write_trajectories_csv(const std::vector<TrajectoryPoint> &points,
                            const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trajectories: " + path);
  out << "vehicle_id,t,s,lane,speed\n";
  for (const auto &p : points)
    out << p.vehicle_id << ',' << format_double(p.t) << ','
        << format_double(p.s) << ',' << p.lane << ','
        << format_double(p.speed) << '\n';
}

Json load_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open JSON file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception &e) {
    throw DataError("cannot parse JSON file " + path + ": " + e.what());
  }
  return j;
}

void save_json_file(const Json &j, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write JSON file: " + path);
  out << j.dump(2) << '\n';
}

} // namespace trafficgp
