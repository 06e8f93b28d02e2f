#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "trafficgp/kernels.hpp"
#include "trafficgp/types.hpp"
#include "trafficgp/vsgp.hpp"

namespace trafficgp {

using Json = nlohmann::json;

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

Json grid_to_json(const SpatioTemporalGrid &grid);
SpatioTemporalGrid grid_from_json(const Json &j);

/// Speed-field CSV: lane, space_index, time_index, speed, count; missing
/// cells omitted. Grid metadata goes to a JSON sidecar.
void write_speed_field_csv(const SpeedField &field, const std::string &path);
void write_grid_sidecar(const SpatioTemporalGrid &grid,
                        const std::string &path);
SpeedField read_speed_field_csv(const std::string &csv_path,
                                const std::string &sidecar_path);

Json kernel_spec_to_json(const KernelSpec &spec,
                         const CoregionalizationSpec *coreg = nullptr);
KernelSpec kernel_spec_from_json(const Json &j,
                                 std::optional<CoregionalizationSpec> *coreg =
                                     nullptr);

Json model_to_json(const TrainedModel &model);
TrainedModel model_from_json(const Json &j);
void save_model(const TrainedModel &model, const std::string &path);
TrainedModel load_model(const std::string &path);

/// Plot-ready matrix dump: S rows x T columns, comma separated.
void write_matrix_csv(const Eigen::MatrixXd &mat, const std::string &path);

void write_trajectories_csv(const std::vector<TrajectoryPoint> &points,
                            const std::string &path);

Json load_json_file(const std::string &path);
void save_json_file(const Json &j, const std::string &path);

} // namespace trafficgp
