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

#ifndef BEVPLAN_SIM_HPP_
#define BEVPLAN_SIM_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bevplan/types.hpp"

namespace bevplan
{

/// Index of the lane whose centerline is closest to `p`; ties and the empty
/// map resolve to the lowest index / -1.
inline int nearest_lane(const MapSpec & map, const Vec2 & p)
{
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.lanes.size(); ++i) {
    const double d = map.lanes[i].centerline.project(p).distance;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

/// Advance one agent by dt. Vehicles follow their nearest centerline at
/// constant speed, preserving lateral offset; pedestrians hold constant
/// velocity along their heading.
inline AgentState step_agent(const AgentState & agent, const MapSpec & map, double dt)
{
  AgentState out = agent;
  if (agent.speed == 0.0) {
    return out;
  }
  if (agent.cls == AgentClass::kPedestrian || map.lanes.empty()) {
    out.pose.x += agent.speed * std::cos(agent.pose.heading) * dt;
    out.pose.y += agent.speed * std::sin(agent.pose.heading) * dt;
    return out;
  }
  const int li = nearest_lane(map, agent.pose.position());
  const Polyline & line = map.lanes[li].centerline;
  const PolylineProjection proj = line.project(agent.pose.position());
  const double s = proj.arc_length + agent.speed * dt;
  const Vec2 base = line.point_at(s);
  const Vec2 n = line.normal_at(s);
  out.pose.x = base.x + n.x * proj.lateral;
  out.pose.y = base.y + n.y * proj.lateral;
  out.pose.heading = line.heading_at(s);
  return out;
}

inline std::vector<AgentState> step_agents(const std::vector<AgentState> & agents,
                                           const MapSpec & map, double dt)
{
  if (dt <= 0.0) {
    throw std::invalid_argument("step_agents: dt must be positive");
  }
  std::vector<AgentState> out;
  out.reserve(agents.size());
  for (const auto & a : agents) {
    out.push_back(step_agent(a, map, dt));
  }
  return out;
}

/// Ego pose at time t along a trajectory whose waypoints sit at dt..T*dt;
/// the pose at t=0 is the scenario's initial pose.
inline Pose ego_pose_at(const Pose & init, const Trajectory & traj, double t)
{
  if (t <= 0.0) {
    return init;
  }
  const double span = traj.horizon();
  if (t >= span) {
    return traj.waypoints.back();
  }
  const int k = static_cast<int>(t / traj.dt);  // segment [k*dt, (k+1)*dt)
  const double frac = (t - k * traj.dt) / traj.dt;
  const Pose & a = (k == 0) ? init : traj.waypoints[k - 1];
  const Pose & b = traj.waypoints[k];
  return interpolate_pose(a, b, frac);
}

/// Simulate the world forward while the ego tracks `ego_traj`.
/// Returns horizon/sim_dt + 1 snapshots including t=0.
inline std::vector<WorldSnapshot> rollout_scenario(const Scenario & s, const Trajectory & ego_traj,
                                                   double horizon, double sim_dt)
{
  if (sim_dt <= 0.0) {
    throw std::invalid_argument("rollout_scenario: sim_dt must be positive");
  }
  const double ratio = ego_traj.dt / sim_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("rollout_scenario: sim_dt must divide trajectory dt");
  }
  if (horizon < 0.0 || horizon > ego_traj.horizon() + 1e-9) {
    throw std::invalid_argument("rollout_scenario: horizon outside [0, T*dt]");
  }
  const int steps = static_cast<int>(std::llround(horizon / sim_dt));

  std::vector<WorldSnapshot> out;
  out.reserve(steps + 1);

  std::vector<AgentState> agents = s.agents;
  Pose prev = s.ego_init.pose;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * sim_dt;
    if (k > 0) {
      agents = step_agents(agents, s.map, sim_dt);
    }
    WorldSnapshot snap;
    snap.t = t;
    snap.agents = agents;
    snap.ego = s.ego_init;
    if (k > 0) {
      snap.ego.pose = ego_pose_at(s.ego_init.pose, ego_traj, t);
      // Instantaneous ego speed from the pose track.
      if (k == steps) {
        snap.ego.speed = (snap.ego.pose.position() - prev.position()).norm() / sim_dt;
      } else {
        const Pose next = ego_pose_at(s.ego_init.pose, ego_traj, t + sim_dt);
        snap.ego.speed = (next.position() - snap.ego.pose.position()).norm() / sim_dt;
      }
    }
    prev = snap.ego.pose;
    out.push_back(std::move(snap));
  }
  return out;
}

}  // namespace bevplan

#endif  // BEVPLAN_SIM_HPP_
