// Copyright 2026 The bevplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BEVPLAN_SCENARIO_IO_HPP_
#define BEVPLAN_SCENARIO_IO_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevplan/types.hpp"

namespace bevplan
{

inline constexpr int kScenarioSchemaVersion = 1;

namespace io_detail
{

inline nlohmann::json pose_to_json(const Pose & p)
{
  return nlohmann::json::array({p.x, p.y, p.heading});
}

inline Pose pose_from_json(const nlohmann::json & j)
{
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline nlohmann::json polyline_to_json(const Polyline & line)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto & p : line.points()) {
    arr.push_back(nlohmann::json::array({p.x, p.y}));
  }
  return arr;
}

inline Polyline polyline_from_json(const nlohmann::json & j)
{
  std::vector<Vec2> pts;
  pts.reserve(j.size());
  for (const auto & p : j) {
    pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return Polyline(std::move(pts));
}

inline nlohmann::json polygon_to_json(const Polygon & poly)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto & p : poly.points()) {
    arr.push_back(nlohmann::json::array({p.x, p.y}));
  }
  return arr;
}

inline Polygon polygon_from_json(const nlohmann::json & j)
{
  std::vector<Vec2> pts;
  pts.reserve(j.size());
  for (const auto & p : j) {
    pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return Polygon(std::move(pts));
}

inline nlohmann::json agent_to_json(const AgentState & a)
{
  return nlohmann::json{{"pose", pose_to_json(a.pose)},
                        {"speed", a.speed},
                        {"length", a.length},
                        {"width", a.width},
                        {"class", to_string(a.cls)}};
}

inline AgentState agent_from_json(const nlohmann::json & j)
{
  return {pose_from_json(j.at("pose")), j.at("speed").get<double>(), j.at("length").get<double>(),
          j.at("width").get<double>(), agent_class_from_string(j.at("class").get<std::string>())};
}

}  // namespace io_detail

inline nlohmann::json scenario_to_json(const Scenario & s)
{
  using namespace io_detail;
  nlohmann::json lanes = nlohmann::json::array();
  for (const auto & lane : s.map.lanes) {
    lanes.push_back({{"centerline", polyline_to_json(lane.centerline)}, {"width", lane.width}});
  }
  nlohmann::json walkways = nlohmann::json::array();
  for (const auto & w : s.map.walkways) {
    walkways.push_back(polygon_to_json(w));
  }
  nlohmann::json statics = nlohmann::json::array();
  for (const auto & b : s.map.static_obstacles) {
    statics.push_back(
        {{"pose", pose_to_json(b.pose)}, {"length", b.length}, {"width", b.width}});
  }
  nlohmann::json agents = nlohmann::json::array();
  for (const auto & a : s.agents) {
    agents.push_back(agent_to_json(a));
  }
  nlohmann::json expert_wps = nlohmann::json::array();
  for (const auto & p : s.expert.waypoints) {
    expert_wps.push_back(pose_to_json(p));
  }
  return nlohmann::json{
      {"schema_version", kScenarioSchemaVersion},
      {"seed", s.seed},
      {"difficulty", s.difficulty},
      {"map",
       {{"speed_limit", s.map.speed_limit},
        {"lanes", lanes},
        {"walkways", walkways},
        {"static_obstacles", statics},
        {"route", polyline_to_json(s.map.route)}}},
      {"agents", agents},
      {"ego_init", agent_to_json(s.ego_init)},
      {"expert", {{"dt", s.expert.dt}, {"waypoints", expert_wps}}},
  };
}

inline Scenario scenario_from_json(const nlohmann::json & j)
{
  using namespace io_detail;
  const int version = j.at("schema_version").get<int>();
  if (version != kScenarioSchemaVersion) {
    throw std::invalid_argument("unsupported scenario schema_version: " +
                                std::to_string(version));
  }
  Scenario s;
  s.seed = j.at("seed").get<std::int64_t>();
  s.difficulty = j.value("difficulty", "straight");
  const auto & m = j.at("map");
  s.map.speed_limit = m.at("speed_limit").get<double>();
  for (const auto & lj : m.at("lanes")) {
    s.map.lanes.push_back({polyline_from_json(lj.at("centerline")), lj.at("width").get<double>()});
  }
  for (const auto & wj : m.at("walkways")) {
    s.map.walkways.push_back(polygon_from_json(wj));
  }
  for (const auto & bj : m.at("static_obstacles")) {
    s.map.static_obstacles.push_back(
        {pose_from_json(bj.at("pose")), bj.at("length").get<double>(), bj.at("width").get<double>()});
  }
  s.map.route = polyline_from_json(m.at("route"));
  for (const auto & aj : j.at("agents")) {
    s.agents.push_back(agent_from_json(aj));
  }
  s.ego_init = agent_from_json(j.at("ego_init"));
  s.expert.dt = j.at("expert").at("dt").get<double>();
  for (const auto & pj : j.at("expert").at("waypoints")) {
    s.expert.waypoints.push_back(pose_from_json(pj));
  }
  return s;
}

inline void save_scenario(const Scenario & s, const std::string & path)
{
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write scenario file: " + path);
  }
  out << scenario_to_json(s).dump(2) << "\n";
}

inline Scenario load_scenario(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario file: " + path);
  }
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

/// Debug grid dump: little-endian header {H, W, L, resolution} as 32-bit
/// values, then H*W class indices, one byte each.
inline void save_grid(const SemanticGrid & grid, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write grid file: " + path);
  }
  const std::uint32_t h = static_cast<std::uint32_t>(grid.height);
  const std::uint32_t w = static_cast<std::uint32_t>(grid.width);
  const std::uint32_t l = kNumSemanticClasses;
  const float res = static_cast<float>(grid.resolution);
  out.write(reinterpret_cast<const char *>(&h), 4);
  out.write(reinterpret_cast<const char *>(&w), 4);
  out.write(reinterpret_cast<const char *>(&l), 4);
  out.write(reinterpret_cast<const char *>(&res), 4);
  out.write(reinterpret_cast<const char *>(grid.cells.data()),
            static_cast<std::streamsize>(grid.cells.size()));
}

inline SemanticGrid load_grid(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open grid file: " + path);
  }
  std::uint32_t h = 0, w = 0, l = 0;
  float res = 0.0f;
  in.read(reinterpret_cast<char *>(&h), 4);
  in.read(reinterpret_cast<char *>(&w), 4);
  in.read(reinterpret_cast<char *>(&l), 4);
  in.read(reinterpret_cast<char *>(&res), 4);
  if (!in || l != kNumSemanticClasses) {
    throw std::runtime_error("bad grid file header: " + path);
  }
  SemanticGrid grid;
  grid.height = static_cast<int>(h);
  grid.width = static_cast<int>(w);
  grid.resolution = static_cast<double>(res);
  grid.cells.resize(static_cast<std::size_t>(h) * w);
  in.read(reinterpret_cast<char *>(grid.cells.data()),
          static_cast<std::streamsize>(grid.cells.size()));
  if (!in) {
    throw std::runtime_error("truncated grid file: " + path);
  }
  return grid;
}

/// Trajectory CSV: header then rows t,x,y,heading.
inline void save_trajectory_csv(const Trajectory & traj, const std::string & path)
{
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write trajectory file: " + path);
  }
  out << "t,x,y,heading\n";
  char buf[160];
  for (int i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", (i + 1) * traj.dt,
                  traj.waypoints[i].x, traj.waypoints[i].y, traj.waypoints[i].heading);
    out << buf;
  }
}

inline Trajectory load_trajectory_csv(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open trajectory file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty trajectory file: " + path);
  }
  Trajectory traj;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    double t, x, y, heading;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &x, &y, &heading) != 4) {
      throw std::runtime_error("bad trajectory row: " + line);
    }
    times.push_back(t);
    traj.waypoints.push_back({x, y, heading});
  }
  if (traj.waypoints.empty()) {
    throw std::runtime_error("trajectory file has no waypoints: " + path);
  }
  traj.dt = times.size() >= 2 ? times[1] - times[0] : times[0];
  if (traj.dt <= 0.0) {
    throw std::runtime_error("trajectory timestamps must be increasing: " + path);
  }
  return traj;
}

}  // namespace bevplan

#endif  // BEVPLAN_SCENARIO_IO_HPP_
