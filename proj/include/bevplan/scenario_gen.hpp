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

#ifndef BEVPLAN_SCENARIO_GEN_HPP_
#define BEVPLAN_SCENARIO_GEN_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bevplan/pdm.hpp"
#include "bevplan/random.hpp"
#include "bevplan/sim.hpp"
#include "bevplan/types.hpp"

namespace bevplan
{

enum class Difficulty { kStraight, kTurn, kMerge, kCrossing };

inline std::string to_string(Difficulty d)
{
  switch (d) {
    case Difficulty::kStraight:
      return "straight";
    case Difficulty::kTurn:
      return "turn";
    case Difficulty::kMerge:
      return "merge";
    case Difficulty::kCrossing:
      return "crossing";
  }
  return "straight";
}

inline Difficulty difficulty_from_string(const std::string & s)
{
  if (s == "straight") return Difficulty::kStraight;
  if (s == "turn") return Difficulty::kTurn;
  if (s == "merge") return Difficulty::kMerge;
  if (s == "crossing") return Difficulty::kCrossing;
  throw std::invalid_argument("unknown difficulty: " + s);
}

struct GenerationError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

namespace gen_detail
{

constexpr double kEgoLength = 4.5;
constexpr double kEgoWidth = 2.0;
constexpr double kLaneWidth = 4.0;

inline Polyline straight_line(Vec2 a, Vec2 b, double step = 2.0)
{
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  std::vector<Vec2> pts;
  pts.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
  }
  return Polyline(std::move(pts));
}

/// Straight approach, quarter arc of the given radius, straight exit.
inline Polyline turn_route(double approach, double radius, double exit_len, int turn_sign)
{
  std::vector<Vec2> pts;
  for (double x = -approach; x < 0.0; x += 1.0) {
    pts.push_back({x, 0.0});
  }
  const Vec2 center{0.0, turn_sign * radius};
  const int arc_steps = static_cast<int>(std::ceil(radius * kPi / 2.0 / 0.5));
  for (int i = 0; i <= arc_steps; ++i) {
    const double a = (kPi / 2.0) * i / arc_steps;
    // start angle points from center back to (0,0)
    const double ang = -turn_sign * kPi / 2.0 + turn_sign * a;
    pts.push_back({center.x + radius * std::cos(ang), center.y + radius * std::sin(ang)});
  }
  const Vec2 end = pts.back();
  const Vec2 dir{0.0, static_cast<double>(turn_sign)};
  for (double s = 1.0; s <= exit_len; s += 1.0) {
    pts.push_back(end + dir * s);
  }
  return Polyline(std::move(pts));
}

/// Lane that blends from a lateral offset into the main line, then follows it.
inline Polyline merge_lane(double x0, double offset, double x_merge, double x_end)
{
  std::vector<Vec2> pts;
  for (double x = x0; x <= x_merge; x += 1.0) {
    const double u = (x - x0) / (x_merge - x0);
    pts.push_back({x, offset * 0.5 * (1.0 + std::cos(kPi * u))});
  }
  for (double x = x_merge + 1.0; x <= x_end; x += 1.0) {
    pts.push_back({x, 0.0});
  }
  return Polyline(std::move(pts));
}

inline Polygon rect(double x0, double y0, double x1, double y1)
{
  return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

inline Trajectory expert_from_route(const Polyline & route, double s0, double speed, int T,
                                    double dt)
{
  Trajectory traj;
  traj.dt = dt;
  traj.waypoints.reserve(T);
  for (int k = 1; k <= T; ++k) {
    const double s = s0 + speed * dt * k;
    const Vec2 p = route.point_at(s);
    traj.waypoints.push_back({p.x, p.y, route.heading_at(s)});
  }
  return traj;
}

inline AgentState vehicle_on_lane(const Polyline & line, double s, double speed)
{
  const Vec2 p = line.point_at(s);
  return {{p.x, p.y, line.heading_at(s)}, speed, 4.5, 2.0, AgentClass::kVehicle};
}

inline bool agents_clear_of_ego(const Scenario & s)
{
  const OrientedBox ego = s.ego_init.footprint();
  for (const auto & a : s.agents) {
    if (boxes_overlap(ego, a.footprint())) {
      return false;
    }
  }
  return true;
}

}  // namespace gen_detail

/// Deterministic scenario generation. Each draw assembles map + agents +
/// expert and is accepted only when the expert scores NC=1 and DAC=1 under
/// the rule-based scorer; bounded retries, then GenerationError.
inline Scenario generate_scenario(std::int64_t seed, Difficulty difficulty,
                                  const Config & cfg = Config{})
{
  using namespace gen_detail;
  Rng rng(static_cast<std::uint64_t>(seed) * 0x9e3779b97f4a7c15ull +
          static_cast<std::uint64_t>(difficulty) + 1ull);

  constexpr int kMaxTries = 60;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    Scenario s;
    s.seed = seed;
    s.difficulty = to_string(difficulty);
    s.map.speed_limit = rng.uniform(7.0, 12.0);
    const double T_hor = cfg.horizon();
    double expert_speed = rng.uniform(0.45, 0.85) * s.map.speed_limit;

    if (difficulty == Difficulty::kStraight) {
      const Polyline ego_lane = straight_line({-30.0, 0.0}, {130.0, 0.0});
      const Polyline oncoming = straight_line({130.0, kLaneWidth}, {-30.0, kLaneWidth});
      s.map.lanes.push_back({ego_lane, kLaneWidth});
      s.map.lanes.push_back({oncoming, kLaneWidth});
      s.map.route = ego_lane;
      s.map.walkways.push_back(rect(-30.0, -3.2 - 2.5, 130.0, -3.2));
      s.map.walkways.push_back(rect(-30.0, kLaneWidth + 3.2, 130.0, kLaneWidth + 3.2 + 2.5));
      if (rng.uniform() < 0.85) {
        const double gap = rng.uniform(16.0, 40.0);
        const double lead_speed = rng.uniform(0.4, 1.0) * expert_speed;
        s.agents.push_back(vehicle_on_lane(ego_lane, 30.0 + gap, lead_speed));
        // keep a safe following distance over the horizon
        const double closing = std::max(0.0, expert_speed - lead_speed) * T_hor;
        if (closing > gap - 8.0) {
          expert_speed = std::max(1.0, lead_speed + (gap - 10.0) / T_hor);
        }
      }
      if (rng.uniform() < 0.6) {
        const double pos = rng.uniform(40.0, 120.0);
        s.agents.push_back(
            vehicle_on_lane(oncoming, 160.0 - pos, rng.uniform(0.4, 0.9) * s.map.speed_limit));
      }
      if (rng.uniform() < 0.4) {
        // parked car off the right shoulder
        s.map.static_obstacles.push_back(
            {{rng.uniform(20.0, 80.0), -kLaneWidth * 0.5 - 1.6, 0.0}, 4.2, 1.8});
      }
      const double s0 = 30.0;
      s.ego_init = {{ego_lane.point_at(s0).x, ego_lane.point_at(s0).y, ego_lane.heading_at(s0)},
                    expert_speed,
                    kEgoLength,
                    kEgoWidth,
                    AgentClass::kVehicle};
      s.expert = expert_from_route(ego_lane, s0, expert_speed, cfg.traj_len, cfg.traj_dt);
    } else if (difficulty == Difficulty::kTurn) {
      const int sign = rng.uniform() < 0.5 ? 1 : -1;
      const double radius = rng.uniform(10.0, 18.0);
      const Polyline route = turn_route(35.0, radius, 40.0, sign);
      s.map.lanes.push_back({route, kLaneWidth});
      // the road not taken: continues straight through the corner
      const Polyline through = straight_line({-35.0, 0.0}, {60.0, 0.0});
      s.map.lanes.push_back({through, kLaneWidth});
      s.map.route = route;
      s.map.walkways.push_back(rect(-35.0, -3.2 - 2.5, 60.0, -3.2));
      // stay comfortable in the corner
      expert_speed = std::min(expert_speed, 0.9 * std::sqrt(cfg.a_lat_max * radius));
      const double s0 = rng.uniform(6.0, 14.0);
      const double agent_s = rng.uniform(45.0, 70.0);
      s.agents.push_back(
          vehicle_on_lane(through, agent_s, rng.uniform(0.3, 0.8) * s.map.speed_limit));
      if (rng.uniform() < 0.5) {
        const double lead_gap = rng.uniform(20.0, 40.0);
        const double lead_speed = rng.uniform(0.6, 1.0) * expert_speed;
        s.agents.push_back(vehicle_on_lane(route, s0 + lead_gap, lead_speed));
      }
      s.ego_init = {{route.point_at(s0).x, route.point_at(s0).y, route.heading_at(s0)},
                    expert_speed,
                    kEgoLength,
                    kEgoWidth,
                    AgentClass::kVehicle};
      s.expert = expert_from_route(route, s0, expert_speed, cfg.traj_len, cfg.traj_dt);
    } else if (difficulty == Difficulty::kMerge) {
      const Polyline main_lane = straight_line({-30.0, 0.0}, {130.0, 0.0});
      const double x_merge = rng.uniform(15.0, 30.0);
      const Polyline ramp = merge_lane(-40.0, rng.uniform(6.0, 9.0), x_merge, 130.0);
      s.map.lanes.push_back({main_lane, kLaneWidth});
      s.map.lanes.push_back({ramp, kLaneWidth});
      s.map.route = main_lane;
      s.map.walkways.push_back(rect(-30.0, -3.2 - 2.5, 130.0, -3.2));
      const double s0 = 25.0;
      // merging vehicle timed near the ego's arrival at the merge point
      const double merge_arc = ramp.project({x_merge, 0.0}).arc_length;
      const double ego_time_to_merge = std::max(0.5, (x_merge + 5.0 - s0) / expert_speed);
      const double agent_speed = rng.uniform(0.5, 0.95) * s.map.speed_limit;
      const double lead_lag = rng.uniform(1.2, 4.0) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
      const double agent_s = merge_arc - agent_speed * (ego_time_to_merge + lead_lag);
      s.agents.push_back(vehicle_on_lane(ramp, agent_s, agent_speed));
      s.ego_init = {{main_lane.point_at(s0).x, main_lane.point_at(s0).y, main_lane.heading_at(s0)},
                    expert_speed,
                    kEgoLength,
                    kEgoWidth,
                    AgentClass::kVehicle};
      s.expert = expert_from_route(main_lane, s0, expert_speed, cfg.traj_len, cfg.traj_dt);
    } else {  // crossing
      const Polyline ego_lane = straight_line({-30.0, 0.0}, {130.0, 0.0});
      const double cx = rng.uniform(45.0, 60.0);
      const int dir = rng.uniform() < 0.5 ? 1 : -1;
      const Polyline cross =
          dir > 0 ? straight_line({cx, -45.0}, {cx, 45.0}) : straight_line({cx, 45.0}, {cx, -45.0});
      s.map.lanes.push_back({ego_lane, kLaneWidth});
      s.map.lanes.push_back({cross, kLaneWidth});
      s.map.route = ego_lane;
      s.map.walkways.push_back(rect(-30.0, -3.2 - 2.5, 130.0, -3.2));
      s.map.walkways.push_back(rect(-30.0, 3.2, 130.0, 3.2 + 2.5));
      const double s0 = 25.0;
      const double ego_time_to_cross = (cx - s0) / expert_speed;
      const double agent_speed = rng.uniform(0.4, 0.9) * s.map.speed_limit;
      const double margin = rng.uniform(1.6, 4.5) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
      const double dist_to_cross = agent_speed * (ego_time_to_cross + margin);
      const double agent_arc = cross.project({cx, 0.0}).arc_length - dist_to_cross;
      s.agents.push_back(vehicle_on_lane(cross, agent_arc, agent_speed));
      // pedestrian stepping across near the intersection
      const double py = rng.uniform() < 0.5 ? -4.0 : 4.0;
      s.agents.push_back({{cx + rng.uniform(-12.0, -4.0), py, py < 0.0 ? kPi / 2.0 : -kPi / 2.0},
                          rng.uniform(0.8, 1.5),
                          0.6,
                          0.6,
                          AgentClass::kPedestrian});
      s.ego_init = {{ego_lane.point_at(s0).x, ego_lane.point_at(s0).y, ego_lane.heading_at(s0)},
                    expert_speed,
                    kEgoLength,
                    kEgoWidth,
                    AgentClass::kVehicle};
      s.expert = expert_from_route(ego_lane, s0, expert_speed, cfg.traj_len, cfg.traj_dt);
    }

    if (!agents_clear_of_ego(s)) {
      continue;
    }
    const SubScores scores = score_trajectory(s, s.expert, cfg);
    if (scores.nc == 1.0 && scores.dac == 1.0) {
      return s;
    }
  }
  throw GenerationError("generate_scenario: no valid expert after bounded retries (seed=" +
                        std::to_string(seed) + ", difficulty=" + to_string(difficulty) + ")");
}

/// Round-robin over the four difficulties, seeded per index.
inline Scenario generate_scenario_mixed(std::int64_t seed, int index, const Config & cfg = Config{})
{
  static constexpr Difficulty kOrder[4] = {Difficulty::kStraight, Difficulty::kTurn,
                                           Difficulty::kMerge, Difficulty::kCrossing};
  return generate_scenario(seed + index, kOrder[index % 4], cfg);
}

}  // namespace bevplan

#endif  // BEVPLAN_SCENARIO_GEN_HPP_
