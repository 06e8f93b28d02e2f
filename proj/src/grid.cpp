#include "trafficgp/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "trafficgp/rng.hpp"

namespace trafficgp {

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string &s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string &field, std::size_t row,
                    const std::string &col) {
  const std::string t = trim(field);
  double v = 0.0;
  const auto *first = t.data();
  const auto *last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw DataError("row " + std::to_string(row) + ": cannot parse '" + field +
                    "' as a finite number for column '" + col + "'");
  return v;
}

} // namespace

IngestResult ingest_trajectories(std::istream &in, const CsvSchema &schema,
                                 const SpatioTemporalGrid &grid) {
  grid.validate();
  std::string header;
  if (!std::getline(in, header))
    throw DataError("trajectory CSV: missing header row");

  const auto names = split_csv_line(header);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index[trim(names[i])] = i;
  auto column = [&](const std::string &name) {
    auto it = index.find(name);
    if (it == index.end())
      throw DataError("trajectory CSV: missing column '" + name + "'");
    return it->second;
  };
  const std::size_t ci = column(schema.vehicle_id), ct = column(schema.t),
                    cs = column(schema.s), cl = column(schema.lane),
                    cv = column(schema.speed);

  IngestResult result;
  std::string line;
  std::size_t row = 1; // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const std::size_t need = std::max({ci, ct, cs, cl, cv});
    if (fields.size() <= need)
      throw DataError("row " + std::to_string(row) + ": expected at least " +
                      std::to_string(need + 1) + " fields, got " +
                      std::to_string(fields.size()));

    TrajectoryPoint p;
    p.vehicle_id = trim(fields[ci]);
    p.t = parse_double(fields[ct], row, schema.t);
    p.s = parse_double(fields[cs], row, schema.s);
    const double lane_raw = parse_double(fields[cl], row, schema.lane);
    p.lane = static_cast<int>(std::llround(lane_raw));
    p.speed = parse_double(fields[cv], row, schema.speed);
    if (p.vehicle_id.empty())
      throw DataError("row " + std::to_string(row) + ": empty vehicle id");
    if (p.speed < 0.0)
      throw DataError("row " + std::to_string(row) +
                      ": negative speed " + std::to_string(p.speed));
    if (p.lane < 1)
      throw DataError("row " + std::to_string(row) + ": lane must be >= 1");

    // window-relative coordinates; out-of-window rows are dropped
    p.s -= grid.s_origin;
    p.t -= grid.t_origin;
    if (p.lane > grid.L || grid.space_cell(p.s) < 0 || grid.time_cell(p.t) < 0) {
      ++result.dropped_outside;
      continue;
    }
    result.points.push_back(std::move(p));
  }
  if (result.points.empty())
    throw DataError("trajectory CSV: no rows inside the configured window");
  return result;
}

IngestResult ingest_trajectories_file(const std::string &path,
                                      const CsvSchema &schema,
                                      const SpatioTemporalGrid &grid) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory CSV: " + path);
  return ingest_trajectories(in, schema, grid);
}

SpeedField aggregate_to_grid(const std::vector<TrajectoryPoint> &points,
                             const SpatioTemporalGrid &grid) {
  SpeedField field(grid);
  std::vector<Eigen::MatrixXd> sums(grid.L,
                                    Eigen::MatrixXd::Zero(grid.S, grid.T));
  for (const auto &p : points) {
    const int i = grid.space_cell(p.s), j = grid.time_cell(p.t);
    if (i < 0 || j < 0 || p.lane < 1 || p.lane > grid.L) continue;
    sums[p.lane - 1](i, j) += p.speed;
    field.counts[p.lane - 1](i, j) += 1;
  }
  for (int l = 0; l < grid.L; ++l)
    for (int i = 0; i < grid.S; ++i)
      for (int j = 0; j < grid.T; ++j)
        if (field.counts[l](i, j) > 0)
          field.values[l](i, j) = sums[l](i, j) / field.counts[l](i, j);
  return field;
}

PenetrationSample sample_penetration(const std::vector<TrajectoryPoint> &points,
                                     double rate, std::uint64_t seed) {
  if (!(rate > 0.0) || rate > 1.0)
    throw DataError("sample_penetration: rate must be in (0, 1]");
  if (points.empty())
    throw DataError("sample_penetration: no trajectory points");

  std::vector<std::string> vehicles; // first-appearance order
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto &p : points)
    if (seen.emplace(p.vehicle_id, vehicles.size()).second)
      vehicles.push_back(p.vehicle_id);

  const std::size_t k = static_cast<std::size_t>(
      std::ceil(rate * static_cast<double>(vehicles.size())));

  // partial Fisher-Yates over the vehicle list
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(vehicles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < k && i + 1 < order.size(); ++i) {
    const std::size_t j = i + uniform_index(rng, order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<bool> chosen(vehicles.size(), false);
  for (std::size_t i = 0; i < k; ++i) chosen[order[i]] = true;

  PenetrationSample out;
  for (std::size_t i = 0; i < vehicles.size(); ++i)
    if (chosen[i]) out.observed_vehicles.push_back(vehicles[i]);
  for (const auto &p : points) {
    if (chosen[seen[p.vehicle_id]])
      out.observed.push_back(p);
    else
      out.held_out.push_back(p);
  }
  return out;
}

ObservationSet field_to_observations(const SpeedField &field,
                                     const std::set<int> &lane_filter,
                                     bool physical_units) {
  const auto &grid = field.grid;
  std::vector<double> xs, ts, ys;
  std::vector<int> lanes;
  for (int l = 1; l <= grid.L; ++l) {
    if (!lane_filter.empty() && !lane_filter.count(l)) continue;
    for (int i = 0; i < grid.S; ++i)
      for (int j = 0; j < grid.T; ++j)
        if (field.present(l, i, j)) {
          xs.push_back((i + 0.5) * (physical_units ? grid.ds : 1.0));
          ts.push_back((j + 0.5) * (physical_units ? grid.dt : 1.0));
          ys.push_back(field.value(l, i, j));
          lanes.push_back(l);
        }
  }
  if (ys.empty())
    throw DataError("field_to_observations: no present cells in the "
                    "selected lanes");

  ObservationSet obs;
  obs.X.resize(static_cast<Eigen::Index>(ys.size()), 2);
  obs.y.resize(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < ys.size(); ++i) {
    obs.X(static_cast<Eigen::Index>(i), 0) = xs[i];
    obs.X(static_cast<Eigen::Index>(i), 1) = ts[i];
    obs.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  const bool multi =
      std::set<int>(lanes.begin(), lanes.end()).size() > 1;
  if (multi) obs.lane = std::move(lanes);
  return obs;
}

} // namespace trafficgp
