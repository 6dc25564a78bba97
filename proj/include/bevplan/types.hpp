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

#ifndef BEVPLAN_TYPES_HPP_
#define BEVPLAN_TYPES_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bevplan/geometry.hpp"

namespace bevplan
{

struct Trajectory
{
  std::vector<Pose> waypoints;  // poses at t = dt, 2*dt, ..., T*dt
  double dt{0.5};

  int size() const { return static_cast<int>(waypoints.size()); }
  double horizon() const { return dt * static_cast<double>(waypoints.size()); }

  /// Checks the type invariants; throws std::invalid_argument on violation.
  void validate(double v_max) const
  {
    if (waypoints.empty()) {
      throw std::invalid_argument("trajectory must have at least one waypoint");
    }
    if (dt <= 0.0) {
      throw std::invalid_argument("trajectory dt must be positive");
    }
    for (const auto & p : waypoints) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.heading)) {
        throw std::invalid_argument("trajectory waypoint is not finite");
      }
    }
    const double max_step = v_max * dt + 1e-9;
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
      const double step =
          (waypoints[i + 1].position() - waypoints[i].position()).norm();
      if (step > max_step) {
        throw std::invalid_argument("trajectory waypoint spacing exceeds v_max*dt");
      }
    }
  }
};

enum class AgentClass : std::uint8_t { kVehicle = 0, kPedestrian = 1 };

inline std::string to_string(AgentClass c)
{
  return c == AgentClass::kVehicle ? "vehicle" : "pedestrian";
}

inline AgentClass agent_class_from_string(const std::string & s)
{
  if (s == "vehicle") {
    return AgentClass::kVehicle;
  }
  if (s == "pedestrian") {
    return AgentClass::kPedestrian;
  }
  throw std::invalid_argument("unknown agent class: " + s);
}

struct AgentState
{
  Pose pose;
  double speed{0.0};
  double length{4.5};
  double width{2.0};
  AgentClass cls{AgentClass::kVehicle};

  OrientedBox footprint() const { return {pose, length, width}; }
};

struct Lane
{
  Polyline centerline;
  double width{3.5};
};

struct MapSpec
{
  std::vector<Lane> lanes;
  std::vector<Polygon> walkways;
  std::vector<OrientedBox> static_obstacles;
  Polyline route;          // designated centerline for the ego
  double speed_limit{10.0};  // m/s, used as the ego-progress reference speed
};

struct Scenario
{
  MapSpec map;
  std::vector<AgentState> agents;
  AgentState ego_init;
  Trajectory expert;
  std::int64_t seed{0};
  std::string difficulty{"straight"};
};

/// World state at one simulation instant.
struct WorldSnapshot
{
  double t{0.0};
  AgentState ego;
  std::vector<AgentState> agents;
};

/// Semantic BEV raster classes, painted in this priority order (later wins).
enum SemanticClass : std::uint8_t {
  kBackground = 0,
  kRoad = 1,
  kWalkway = 2,
  kCenterline = 3,
  kStatic = 4,
  kVehicle = 5,
  kPedestrian = 6,
};

inline constexpr int kNumSemanticClasses = 7;
inline constexpr double kGridExtentMeters = 64.0;

/// One-hot semantic occupancy stored as one class index per cell.
/// Cell (row, col) covers y (left) and x (forward) in the ego frame:
///   x = -extent/2 + (col + 0.5) * resolution
///   y = -extent/2 + (row + 0.5) * resolution
struct SemanticGrid
{
  int height{0};
  int width{0};
  double resolution{0.5};
  Pose frame;
  std::vector<std::uint8_t> cells;  // row-major, height * width

  std::uint8_t at(int row, int col) const { return cells[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t & at(int row, int col) { return cells[static_cast<std::size_t>(row) * width + col]; }

  double extent_x() const { return width * resolution; }
  double extent_y() const { return height * resolution; }

  /// Expand to dense one-hot floats, channel-major [L][H][W].
  std::vector<double> one_hot() const
  {
    std::vector<double> out(static_cast<std::size_t>(kNumSemanticClasses) * height * width, 0.0);
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out[cells[i] * plane + i] = 1.0;
    }
    return out;
  }
};

}  // namespace bevplan

#endif  // BEVPLAN_TYPES_HPP_
