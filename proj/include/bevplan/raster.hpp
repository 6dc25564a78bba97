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

#ifndef BEVPLAN_RASTER_HPP_
#define BEVPLAN_RASTER_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bevplan/types.hpp"

namespace bevplan
{

namespace detail
{

/// Paint every cell whose center lies inside the polygon (given in grid frame).
inline void fill_polygon(SemanticGrid & grid, const Polygon & poly, std::uint8_t cls)
{
  if (poly.points().size() < 3) {
    return;
  }
  const double res = grid.resolution;
  const double x0 = -0.5 * grid.extent_x();
  const double y0 = -0.5 * grid.extent_y();
  const auto bb = poly.bounding_box();
  const int col_lo = std::max(0, static_cast<int>(std::floor((bb[0].x - x0) / res)));
  const int col_hi = std::min(grid.width - 1, static_cast<int>(std::floor((bb[1].x - x0) / res)));
  const int row_lo = std::max(0, static_cast<int>(std::floor((bb[0].y - y0) / res)));
  const int row_hi = std::min(grid.height - 1, static_cast<int>(std::floor((bb[1].y - y0) / res)));
  for (int r = row_lo; r <= row_hi; ++r) {
    const double cy = y0 + (r + 0.5) * res;
    for (int c = col_lo; c <= col_hi; ++c) {
      const double cx = x0 + (c + 0.5) * res;
      if (poly.contains({cx, cy}, 0.0)) {
        grid.at(r, c) = cls;
      }
    }
  }
}

/// Mark cells traversed by a polyline by dense sampling (quarter-cell step).
inline void trace_polyline(SemanticGrid & grid, const std::vector<Vec2> & pts, std::uint8_t cls)
{
  if (pts.size() < 2) {
    return;
  }
  const double res = grid.resolution;
  const double x0 = -0.5 * grid.extent_x();
  const double y0 = -0.5 * grid.extent_y();
  const double step = 0.25 * res;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i];
    const Vec2 d = pts[i + 1] - a;
    const double len = d.norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 0; k <= n; ++k) {
      const Vec2 p = a + d * (static_cast<double>(k) / n);
      const int c = static_cast<int>(std::floor((p.x - x0) / res));
      const int r = static_cast<int>(std::floor((p.y - y0) / res));
      if (r >= 0 && r < grid.height && c >= 0 && c < grid.width) {
        grid.at(r, c) = cls;
      }
    }
  }
}

inline Polygon polygon_to_frame(const Polygon & poly, const Pose & frame)
{
  std::vector<Vec2> pts;
  pts.reserve(poly.points().size());
  for (const auto & p : poly.points()) {
    pts.push_back(point_to_frame(p, frame));
  }
  return Polygon(std::move(pts));
}

inline std::vector<Vec2> polyline_to_frame(const std::vector<Vec2> & pts, const Pose & frame)
{
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto & p : pts) {
    out.push_back(point_to_frame(p, frame));
  }
  return out;
}

}  // namespace detail

/// Rasterize one snapshot into an ego-centric one-hot grid. Classes are
/// painted in fixed priority order, later classes overwriting earlier ones:
/// background < road < walkway < centerline < static < vehicle < pedestrian.
/// With include_ego the ego footprint is painted as a vehicle; the training
/// pipeline uses this so per-candidate future maps carry the rolled-out ego
/// position and stay action-dependent.
inline SemanticGrid rasterize(const MapSpec & map, const WorldSnapshot & snapshot,
                              const Pose & frame, int height, int width, double resolution,
                              bool include_ego = false)
{
  if (height <= 0 || width <= 0 || resolution <= 0.0) {
    throw std::invalid_argument("rasterize: grid dimensions must be positive");
  }
  SemanticGrid grid;
  grid.height = height;
  grid.width = width;
  grid.resolution = resolution;
  grid.frame = frame;
  grid.cells.assign(static_cast<std::size_t>(height) * width, kBackground);

  for (const auto & lane : map.lanes) {
    const Polygon poly = detail::polygon_to_frame(lane_polygon(lane.centerline, lane.width), frame);
    detail::fill_polygon(grid, poly, kRoad);
  }
  for (const auto & walkway : map.walkways) {
    detail::fill_polygon(grid, detail::polygon_to_frame(walkway, frame), kWalkway);
  }
  for (const auto & lane : map.lanes) {
    detail::trace_polyline(grid, detail::polyline_to_frame(lane.centerline.points(), frame),
                           kCenterline);
  }
  for (const auto & box : map.static_obstacles) {
    detail::fill_polygon(grid, detail::polygon_to_frame(box.polygon(), frame), kStatic);
  }
  if (include_ego) {
    detail::fill_polygon(grid, detail::polygon_to_frame(snapshot.ego.footprint().polygon(), frame),
                         kVehicle);
  }
  for (const auto & agent : snapshot.agents) {
    if (agent.cls == AgentClass::kVehicle) {
      detail::fill_polygon(grid, detail::polygon_to_frame(agent.footprint().polygon(), frame),
                           kVehicle);
    }
  }
  for (const auto & agent : snapshot.agents) {
    if (agent.cls == AgentClass::kPedestrian) {
      detail::fill_polygon(grid, detail::polygon_to_frame(agent.footprint().polygon(), frame),
                           kPedestrian);
    }
  }
  return grid;
}

}  // namespace bevplan

#endif  // BEVPLAN_RASTER_HPP_
