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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

#include "bevplan/pdm.hpp"
#include "bevplan/raster.hpp"
#include "bevplan/scenario_gen.hpp"
#include "bevplan/scenario_io.hpp"
#include "bevplan/sim.hpp"

using namespace bevplan;

namespace
{

Polyline circle_arc(double radius, double theta0, double theta1, double dtheta)
{
  std::vector<Vec2> pts;
  const Vec2 center{0.0, radius};
  for (double th = theta0; th <= theta1 + 1e-12; th += dtheta) {
    pts.push_back({center.x + radius * std::sin(th), center.y - radius * std::cos(th)});
  }
  return Polyline(std::move(pts));
}

Trajectory stationary_trajectory(const Pose & p, int T, double dt)
{
  Trajectory t;
  t.dt = dt;
  t.waypoints.assign(T, p);
  return t;
}

Scenario two_lane_scene()
{
  Scenario s;
  std::vector<Vec2> pts;
  for (double x = -30.0; x <= 100.0; x += 2.0) {
    pts.push_back({x, 0.0});
  }
  s.map.lanes.push_back({Polyline(pts), 4.0});
  s.map.route = Polyline(pts);
  s.map.speed_limit = 10.0;
  s.ego_init = {{0.0, 0.0, 0.0}, 5.0, 4.5, 2.0, AgentClass::kVehicle};
  s.agents.push_back({{20.0, 0.0, 0.0}, 3.0, 4.5, 2.0, AgentClass::kVehicle});
  s.agents.push_back({{5.0, 6.0, -kPi / 2.0}, 1.0, 0.6, 0.6, AgentClass::kPedestrian});
  Trajectory expert;
  expert.dt = 0.5;
  for (int k = 1; k <= 8; ++k) {
    expert.waypoints.push_back({5.0 * 0.5 * k, 0.0, 0.0});
  }
  s.expert = expert;
  return s;
}

}  // namespace

TEST_CASE("step_agents trivial kinematics")
{
  MapSpec map;
  AgentState still{{3.0, 4.0, 1.0}, 0.0, 4.5, 2.0, AgentClass::kVehicle};
  auto out = step_agents({still}, map, 0.5);
  CHECK(out[0].pose.x == 3.0);
  CHECK(out[0].pose.y == 4.0);

  AgentState ped{{0.0, 0.0, 0.0}, 1.0, 0.6, 0.6, AgentClass::kPedestrian};
  out = step_agents({ped}, map, 0.5);
  CHECK(out[0].pose.x == Catch::Approx(0.5));
  CHECK(out[0].pose.y == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("vehicle on a circular arc follows the closed-form rotation")
{
  // closed-form oracle: heading change = curvature * distance
  const double radius = 10.0;
  MapSpec map;
  map.lanes.push_back({circle_arc(radius, -0.3, 0.8, 1e-3), 4.0});
  AgentState car{{0.0, 0.0, 0.0}, 5.0, 4.5, 2.0, AgentClass::kVehicle};
  const double dt = 0.5;
  auto out = step_agents({car}, map, dt);
  const double expected = (5.0 * dt) / radius;
  CHECK(std::abs(angle_diff(out[0].pose.heading, car.pose.heading) - expected) < 1e-6);
  // position stays on the arc
  const double r_now = (out[0].pose.position() - Vec2{0.0, radius}).norm();
  CHECK(r_now == Catch::Approx(radius).margin(1e-4));
}

TEST_CASE("rollout snapshot count and fixed points")
{
  Scenario s = two_lane_scene();

  auto single = rollout_scenario(s, s.expert, 0.0, 0.1);
  REQUIRE(single.size() == 1);
  CHECK(single[0].ego.pose.x == s.ego_init.pose.x);
  CHECK(single[0].ego.speed == s.ego_init.speed);
  CHECK(single[0].agents[0].pose.x == s.agents[0].pose.x);

  auto full = rollout_scenario(s, s.expert, 4.0, 0.1);
  CHECK(full.size() == 41);
  CHECK(full.back().ego.pose.x == Catch::Approx(20.0));

  const Trajectory stay = stationary_trajectory(s.ego_init.pose, 8, 0.5);
  auto fixed = rollout_scenario(s, stay, 4.0, 0.1);
  for (const auto & snap : fixed) {
    CHECK(snap.ego.pose.x == s.ego_init.pose.x);
    CHECK(snap.ego.pose.y == s.ego_init.pose.y);
  }

  CHECK_THROWS_AS(rollout_scenario(s, s.expert, 5.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(rollout_scenario(s, s.expert, 4.0, 0.3), std::invalid_argument);
}

TEST_CASE("rollout concatenation is consistent")
{
  Scenario s = two_lane_scene();
  auto whole = rollout_scenario(s, s.expert, 4.0, 0.1);

  auto first = rollout_scenario(s, s.expert, 2.0, 0.1);
  Scenario tail = s;
  tail.agents = first.back().agents;
  tail.ego_init = first.back().ego;
  Trajectory rest;
  rest.dt = s.expert.dt;
  rest.waypoints.assign(s.expert.waypoints.begin() + 4, s.expert.waypoints.end());
  auto second = rollout_scenario(tail, rest, 2.0, 0.1);

  REQUIRE(first.size() + second.size() - 1 == whole.size());
  for (std::size_t k = 0; k < second.size(); ++k) {
    const auto & a = whole[first.size() - 1 + k];
    const auto & b = second[k];
    REQUIRE(a.agents.size() == b.agents.size());
    for (std::size_t i = 0; i < a.agents.size(); ++i) {
      CHECK(a.agents[i].pose.x == b.agents[i].pose.x);
      CHECK(a.agents[i].pose.y == b.agents[i].pose.y);
      CHECK(a.agents[i].pose.heading == b.agents[i].pose.heading);
    }
  }
}

TEST_CASE("rasterize paints background, priority classes, and stays one-hot")
{
  MapSpec empty;
  WorldSnapshot snap;
  snap.ego = {{0.0, 0.0, 0.0}, 0.0, 4.5, 2.0, AgentClass::kVehicle};
  const SemanticGrid blank = rasterize(empty, snap, {0.0, 0.0, 0.0}, 64, 64, 1.0);
  for (auto c : blank.cells) {
    CHECK(c == kBackground);
  }

  // vehicle footprint cell count close to area / resolution^2
  WorldSnapshot with_car = snap;
  with_car.agents.push_back({{4.0, 3.0, 0.6}, 0.0, 4.5, 2.0, AgentClass::kVehicle});
  const double res = 0.5;
  const SemanticGrid g = rasterize(empty, with_car, {0.0, 0.0, 0.0}, 128, 128, res);
  int count = 0;
  for (auto c : g.cells) {
    CHECK(c < kNumSemanticClasses);
    if (c == kVehicle) {
      ++count;
    }
  }
  const double area = 4.5 * 2.0;
  const double perimeter = 2.0 * (4.5 + 2.0);
  CHECK(std::abs(count - area / (res * res)) <= perimeter / res);

  // rotating the frame by 2*pi yields the identical grid
  const SemanticGrid g2 = rasterize(empty, with_car, {0.0, 0.0, 2.0 * kPi}, 128, 128, res);
  CHECK(g.cells == g2.cells);
}

TEST_CASE("rasterize is frame covariant")
{
  Scenario s = two_lane_scene();
  auto snaps = rollout_scenario(s, s.expert, 2.0, 0.5);
  const WorldSnapshot & snap = snaps.back();
  const Pose frame{7.3, -1.2, 0.6};

  const SemanticGrid direct = rasterize(s.map, snap, frame, 64, 64, 1.0, true);

  // rigidly transform the whole world into the frame, then render at origin
  MapSpec moved;
  moved.speed_limit = s.map.speed_limit;
  for (const auto & lane : s.map.lanes) {
    std::vector<Vec2> pts;
    for (const auto & p : lane.centerline.points()) {
      pts.push_back(point_to_frame(p, frame));
    }
    moved.lanes.push_back({Polyline(pts), lane.width});
  }
  for (const auto & w : s.map.walkways) {
    std::vector<Vec2> pts;
    for (const auto & p : w.points()) {
      pts.push_back(point_to_frame(p, frame));
    }
    moved.walkways.push_back(Polygon(pts));
  }
  for (const auto & b : s.map.static_obstacles) {
    moved.static_obstacles.push_back({transform_to_frame(b.pose, frame), b.length, b.width});
  }
  WorldSnapshot msnap = snap;
  msnap.ego.pose = transform_to_frame(snap.ego.pose, frame);
  for (auto & a : msnap.agents) {
    a.pose = transform_to_frame(a.pose, frame);
  }
  const SemanticGrid origin = rasterize(moved, msnap, {0.0, 0.0, 0.0}, 64, 64, 1.0, true);
  CHECK(direct.cells == origin.cells);
}

TEST_CASE("generate_scenario is deterministic and seed sensitive")
{
  Config cfg = Config::desk();
  const Scenario a = generate_scenario(7, Difficulty::kStraight, cfg);
  const Scenario b = generate_scenario(7, Difficulty::kStraight, cfg);
  CHECK(scenario_to_json(a).dump() == scenario_to_json(b).dump());

  const Scenario c = generate_scenario(8, Difficulty::kStraight, cfg);
  CHECK(scenario_to_json(a).dump() != scenario_to_json(c).dump());
}

TEST_CASE("generated experts satisfy the scorer gate on every difficulty")
{
  Config cfg = Config::desk();
  for (auto diff :
       {Difficulty::kStraight, Difficulty::kTurn, Difficulty::kMerge, Difficulty::kCrossing}) {
    for (std::int64_t seed : {1, 2, 3}) {
      const Scenario s = generate_scenario(seed, diff, cfg);
      const SubScores scores = score_trajectory(s, s.expert, cfg);
      INFO(to_string(diff) << " seed " << seed);
      CHECK(scores.nc == 1.0);
      CHECK(scores.dac == 1.0);
      if (diff != Difficulty::kStraight) {
        CHECK(!s.agents.empty());
      }
    }
  }
}

TEST_CASE("scenario json round-trip preserves the rollout")
{
  Config cfg = Config::desk();
  const Scenario s = generate_scenario(21, Difficulty::kCrossing, cfg);
  const std::string path = "/tmp/bevplan_test_scenario.json";
  save_scenario(s, path);
  const Scenario r = load_scenario(path);
  CHECK(scenario_to_json(s).dump() == scenario_to_json(r).dump());
  const auto roll_a = rollout_scenario(s, s.expert, 4.0, 0.1);
  const auto roll_b = rollout_scenario(r, r.expert, 4.0, 0.1);
  REQUIRE(roll_a.size() == roll_b.size());
  for (std::size_t i = 0; i < roll_a.size(); ++i) {
    CHECK(roll_a[i].ego.pose.x == roll_b[i].ego.pose.x);
    for (std::size_t j = 0; j < roll_a[i].agents.size(); ++j) {
      CHECK(roll_a[i].agents[j].pose.x == roll_b[i].agents[j].pose.x);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("grid dump and trajectory csv round-trip")
{
  Scenario s = two_lane_scene();
  auto snaps = rollout_scenario(s, s.expert, 1.0, 0.5);
  const SemanticGrid g = rasterize(s.map, snaps.back(), snaps.back().ego.pose, 32, 32, 2.0);
  const std::string gpath = "/tmp/bevplan_test_grid.bin";
  save_grid(g, gpath);
  const SemanticGrid r = load_grid(gpath);
  CHECK(r.height == g.height);
  CHECK(r.width == g.width);
  CHECK(r.resolution == Catch::Approx(g.resolution));
  CHECK(r.cells == g.cells);
  std::remove(gpath.c_str());

  const std::string tpath = "/tmp/bevplan_test_traj.csv";
  save_trajectory_csv(s.expert, tpath);
  const Trajectory t = load_trajectory_csv(tpath);
  REQUIRE(t.size() == s.expert.size());
  CHECK(t.dt == Catch::Approx(s.expert.dt));
  for (int i = 0; i < t.size(); ++i) {
    CHECK(t.waypoints[i].x == s.expert.waypoints[i].x);
    CHECK(t.waypoints[i].y == s.expert.waypoints[i].y);
  }
  std::remove(tpath.c_str());
}
