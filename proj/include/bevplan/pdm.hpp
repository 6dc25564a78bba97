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

#ifndef BEVPLAN_PDM_HPP_
#define BEVPLAN_PDM_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bevplan/config.hpp"
#include "bevplan/sim.hpp"
#include "bevplan/types.hpp"

namespace bevplan
{

/// The five rule-based sub-scores. nc/dac/ttc/comf are binary, ep continuous.
struct SubScores
{
  double nc{1.0};
  double dac{1.0};
  double ttc{1.0};
  double comf{1.0};
  double ep{0.0};
};

/// PDMS = NC * DAC * (5*EP + 5*TTC + 2*Comf) / 12.
inline double aggregate_pdms(const SubScores & s)
{
  return s.nc * s.dac * (5.0 * s.ep + 5.0 * s.ttc + 2.0 * s.comf) / 12.0;
}

namespace detail
{

/// At-fault test: a hit is forgiven only when the striking agent sits in the
/// ego rear half-plane and its velocity points along the ego's direction of
/// travel (struck from behind).
inline bool struck_from_behind(const AgentState & ego, const AgentState & other)
{
  const Vec2 fwd = ego.pose.forward();
  const Vec2 rel = other.pose.position() - ego.pose.position();
  const Vec2 vel = other.pose.forward() * other.speed;
  return rel.dot(fwd) < 0.0 && vel.dot(fwd) > 0.0;
}

inline bool snapshot_has_at_fault_collision(const WorldSnapshot & snap, const MapSpec & map)
{
  const OrientedBox ego_box = snap.ego.footprint();
  for (const auto & agent : snap.agents) {
    if (boxes_overlap(ego_box, agent.footprint()) && !struck_from_behind(snap.ego, agent)) {
      return true;
    }
  }
  for (const auto & box : map.static_obstacles) {
    if (boxes_overlap(ego_box, box)) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// No at-fault collision over the rollout.
inline double check_collision(const std::vector<WorldSnapshot> & rollout, const MapSpec & map)
{
  if (rollout.empty()) {
    throw std::invalid_argument("check_collision: empty rollout");
  }
  for (const auto & snap : rollout) {
    if (detail::snapshot_has_at_fault_collision(snap, map)) {
      return 0.0;
    }
  }
  return 1.0;
}

/// Drivable-area compliance: all four ego corners inside the lane union at
/// every step (lane polygons are closed, boundary points comply).
inline double check_dac(const std::vector<WorldSnapshot> & rollout, const MapSpec & map)
{
  if (rollout.empty()) {
    throw std::invalid_argument("check_dac: empty rollout");
  }
  std::vector<Polygon> lane_polys;
  lane_polys.reserve(map.lanes.size());
  for (const auto & lane : map.lanes) {
    lane_polys.push_back(lane_polygon(lane.centerline, lane.width));
  }
  for (const auto & snap : rollout) {
    for (const Vec2 & corner : snap.ego.footprint().corners()) {
      bool inside = false;
      for (const auto & poly : lane_polys) {
        if (poly.contains(corner)) {
          inside = true;
          break;
        }
      }
      if (!inside) {
        return 0.0;
      }
    }
  }
  return 1.0;
}

/// Time-to-collision: from every step, project the ego ballistically along
/// its instantaneous velocity and the agents per their policy for
/// ttc_horizon seconds; fail on any projected overlap.
inline double compute_ttc(const std::vector<WorldSnapshot> & rollout, const MapSpec & map,
                          double ttc_horizon = 1.0, double sim_dt = 0.1)
{
  if (rollout.empty()) {
    throw std::invalid_argument("compute_ttc: empty rollout");
  }
  const int proj_steps = std::max(1, static_cast<int>(std::llround(ttc_horizon / sim_dt)));
  for (const auto & snap : rollout) {
    const Vec2 step_vec = snap.ego.pose.forward() * (snap.ego.speed * sim_dt);
    AgentState ego = snap.ego;
    std::vector<AgentState> agents = snap.agents;
    for (int k = 1; k <= proj_steps; ++k) {
      ego.pose.x += step_vec.x;
      ego.pose.y += step_vec.y;
      agents = step_agents(agents, map, sim_dt);
      const OrientedBox ego_box = ego.footprint();
      for (const auto & agent : agents) {
        if (boxes_overlap(ego_box, agent.footprint())) {
          return 0.0;
        }
      }
      for (const auto & box : map.static_obstacles) {
        if (boxes_overlap(ego_box, box)) {
          return 0.0;
        }
      }
    }
  }
  return 1.0;
}

/// Finite-difference acceleration/jerk profile of a trajectory; exposed so
/// tests can compare against closed forms.
struct ComfortProfile
{
  std::vector<double> a_lon;
  std::vector<double> a_lat;
  std::vector<double> jerk;
};

inline ComfortProfile comfort_profile(const Trajectory & traj)
{
  if (traj.size() < 3) {
    throw std::invalid_argument("comfort_profile: need at least 3 waypoints");
  }
  const double dt = traj.dt;
  const int T = traj.size();
  std::vector<Vec2> vel(T - 1);
  for (int i = 0; i + 1 < T; ++i) {
    vel[i] = (traj.waypoints[i + 1].position() - traj.waypoints[i].position()) * (1.0 / dt);
  }
  ComfortProfile prof;
  std::vector<Vec2> acc(T - 2);
  for (int i = 0; i + 2 < T; ++i) {
    acc[i] = (vel[i + 1] - vel[i]) * (1.0 / dt);
    const double speed = vel[i].norm();
    Vec2 dir;
    if (speed > 1e-9) {
      dir = vel[i] * (1.0 / speed);
    } else {
      dir = traj.waypoints[i].forward();
    }
    prof.a_lon.push_back(acc[i].dot(dir));
    prof.a_lat.push_back(dir.cross(acc[i]));
  }
  for (int i = 0; i + 3 < T; ++i) {
    prof.jerk.push_back((acc[i + 1] - acc[i]).norm() / dt);
  }
  return prof;
}

inline double compute_comfort(const Trajectory & traj, double a_lon_max = 4.0,
                              double a_lat_max = 4.0, double jerk_max = 8.0)
{
  const ComfortProfile prof = comfort_profile(traj);
  for (double a : prof.a_lon) {
    if (std::abs(a) > a_lon_max) {
      return 0.0;
    }
  }
  for (double a : prof.a_lat) {
    if (std::abs(a) > a_lat_max) {
      return 0.0;
    }
  }
  for (double j : prof.jerk) {
    if (j > jerk_max) {
      return 0.0;
    }
  }
  return 1.0;
}

/// Ego progress: arc-length advance of the ego projection along the route,
/// normalized by speed-limit travel over the same horizon, clipped to [0,1].
inline double compute_ep(const std::vector<WorldSnapshot> & rollout, const Polyline & route,
                         double speed_limit)
{
  if (rollout.empty()) {
    throw std::invalid_argument("compute_ep: empty rollout");
  }
  if (route.points().size() < 2) {
    throw std::invalid_argument("compute_ep: degenerate route");
  }
  const double s0 = route.project(rollout.front().ego.pose.position()).arc_length;
  const double s1 = route.project(rollout.back().ego.pose.position()).arc_length;
  const double horizon = rollout.back().t - rollout.front().t;
  const double reference = speed_limit * horizon;
  if (reference <= 0.0) {
    return 0.0;
  }
  return std::clamp((s1 - s0) / reference, 0.0, 1.0);
}

/// Full rule-based evaluation of one candidate trajectory.
inline SubScores score_trajectory(const Scenario & scenario, const Trajectory & traj,
                                  const Config & cfg)
{
  if (traj.size() != cfg.traj_len) {
    throw std::invalid_argument("score_trajectory: trajectory length does not match config");
  }
  const auto rollout = rollout_scenario(scenario, traj, traj.horizon(), cfg.sim_dt);
  SubScores out;
  out.nc = check_collision(rollout, scenario.map);
  out.dac = check_dac(rollout, scenario.map);
  out.ttc = compute_ttc(rollout, scenario.map, cfg.ttc_horizon, cfg.sim_dt);
  out.comf = compute_comfort(traj, cfg.a_lon_max, cfg.a_lat_max, cfg.jerk_max);
  out.ep = compute_ep(rollout, scenario.map.route, scenario.map.speed_limit);
  return out;
}

}  // namespace bevplan

#endif  // BEVPLAN_PDM_HPP_
