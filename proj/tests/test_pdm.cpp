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

#include "bevplan/pdm.hpp"
#include "bevplan/random.hpp"
#include "bevplan/scenario_gen.hpp"

using namespace bevplan;

namespace
{

WorldSnapshot snap_of(const AgentState & ego, std::vector<AgentState> agents = {})
{
  WorldSnapshot s;
  s.ego = ego;
  s.agents = std::move(agents);
  return s;
}

Trajectory straight_traj(double speed, int T = 8, double dt = 0.5)
{
  Trajectory t;
  t.dt = dt;
  for (int k = 1; k <= T; ++k) {
    t.waypoints.push_back({speed * dt * k, 0.0, 0.0});
  }
  return t;
}

}  // namespace

TEST_CASE("aggregate_pdms formula")
{
  CHECK(aggregate_pdms({1, 1, 1, 1, 1}) == Catch::Approx(1.0));
  CHECK(aggregate_pdms({0, 1, 1, 1, 1}) == 0.0);
  CHECK(aggregate_pdms({1, 0, 1, 1, 1}) == 0.0);
  // reference human row: NC=1, DAC=1, EP=0.875, TTC=1, Comf=0.999 -> 0.948
  const double human = aggregate_pdms({1.0, 1.0, 1.0, 0.999, 0.875});
  CHECK(human == Catch::Approx(0.94775).margin(1e-12));
  CHECK(std::abs(human - 0.948) < 5e-4);
}

TEST_CASE("pdms is monotone and bounded")
{
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    SubScores s;
    s.nc = rng.uniform() < 0.5 ? 0.0 : 1.0;
    s.dac = rng.uniform() < 0.5 ? 0.0 : 1.0;
    s.ttc = rng.uniform() < 0.5 ? 0.0 : 1.0;
    s.comf = rng.uniform() < 0.5 ? 0.0 : 1.0;
    s.ep = rng.uniform();
    const double base = aggregate_pdms(s);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    SubScores up = s;
    switch (i % 5) {
      case 0: up.nc = 1.0; break;
      case 1: up.dac = 1.0; break;
      case 2: up.ttc = 1.0; break;
      case 3: up.comf = 1.0; break;
      case 4: up.ep = std::min(1.0, s.ep + rng.uniform()); break;
    }
    CHECK(aggregate_pdms(up) >= base);
  }
}

TEST_CASE("collision check with the struck-from-behind exemption")
{
  MapSpec empty;
  AgentState ego{{0.0, 0.0, 0.0}, 0.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(check_collision({snap_of(ego)}, empty) == 1.0);

  // head-on overlap at step 0 is at fault
  AgentState oncoming{{3.0, 0.0, kPi}, 4.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(check_collision({snap_of(ego, {oncoming})}, empty) == 0.0);

  // same overlap from directly behind, moving with the ego: exempt
  AgentState rear{{-4.0, 0.0, 0.0}, 3.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(boxes_overlap(ego.footprint(), rear.footprint()));
  CHECK(check_collision({snap_of(ego, {rear})}, empty) == 1.0);

  // a stationary overlapping car behind is not a striker: at fault
  AgentState parked{{-4.0, 0.0, 0.0}, 0.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(check_collision({snap_of(ego, {parked})}, empty) == 0.0);

  // static obstacles always count
  MapSpec with_block;
  with_block.static_obstacles.push_back({{1.0, 0.0, 0.0}, 2.0, 2.0});
  CHECK(check_collision({snap_of(ego)}, with_block) == 0.0);
}

TEST_CASE("drivable area compliance uses the closed lane region")
{
  MapSpec map;
  std::vector<Vec2> pts;
  for (double x = -20.0; x <= 60.0; x += 2.0) {
    pts.push_back({x, 0.0});
  }
  map.lanes.push_back({Polyline(pts), 4.0});

  AgentState ego{{10.0, 0.0, 0.0}, 5.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(check_dac({snap_of(ego)}, map) == 1.0);

  // corners exactly on the boundary: width 2 centered at y=1 touches y=2
  AgentState edge{{10.0, 1.0, 0.0}, 5.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(check_dac({snap_of(edge)}, map) == 1.0);

  AgentState off{{10.0, 1.2, 0.0}, 5.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(check_dac({snap_of(off)}, map) == 0.0);

  AgentState sideways{{10.0, 4.5, kPi / 2.0}, 5.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(check_dac({snap_of(sideways)}, map) == 0.0);
}

TEST_CASE("time-to-collision projection")
{
  MapSpec empty;
  AgentState ego{{0.0, 0.0, 0.0}, 5.0, 4.5, 2.0, AgentClass::kVehicle};
  CHECK(compute_ttc({snap_of(ego)}, empty) == 1.0);

  // front bumper at 2.25; obstacle of length 1 whose near edge sits gap ahead
  const auto blocked = [&](double gap) {
    MapSpec m;
    m.static_obstacles.push_back({{2.25 + gap + 0.5, 0.0, 0.0}, 1.0, 2.0});
    return compute_ttc({snap_of(ego)}, m, 1.0, 0.1);
  };
  CHECK(blocked(10.0) == 1.0);  // ttc = 2 s > 1 s
  CHECK(blocked(3.0) == 0.0);   // ttc = 0.6 s < 1 s

  // stationary ego is never projected into anything
  AgentState still{{0.0, 0.0, 0.0}, 0.0, 4.5, 2.0, AgentClass::kVehicle};
  MapSpec m;
  m.static_obstacles.push_back({{5.0, 0.0, 0.0}, 1.0, 2.0});
  CHECK(compute_ttc({snap_of(still)}, m) == 1.0);
}

TEST_CASE("comfort thresholds")
{
  CHECK(compute_comfort(straight_traj(8.0)) == 1.0);

  // full stop from 20 m/s within one 0.5 s step: |a| = 40 > 4
  Trajectory stop;
  stop.dt = 0.5;
  stop.waypoints = {{10.0, 0.0, 0.0}, {20.0, 0.0, 0.0}, {20.0, 0.0, 0.0}, {20.0, 0.0, 0.0}};
  CHECK(compute_comfort(stop) == 0.0);

  // uniform circular motion at v=5, R=10: a_lat = 2.5 <= 4 passes
  const double R = 10.0, v = 5.0, dt = 0.5;
  Trajectory circle;
  circle.dt = dt;
  for (int k = 1; k <= 8; ++k) {
    const double th = v * dt * k / R;
    circle.waypoints.push_back({R * std::sin(th), R * (1.0 - std::cos(th)), th});
  }
  CHECK(compute_comfort(circle) == 1.0);
  const ComfortProfile prof = comfort_profile(circle);
  for (double a : prof.a_lat) {
    CHECK(a == Catch::Approx(v * v / R).margin(0.15));
  }
  for (double a : prof.a_lon) {
    CHECK(std::abs(a) < 0.5);
  }

  Trajectory short_traj;
  short_traj.dt = 0.5;
  short_traj.waypoints = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(compute_comfort(short_traj), std::invalid_argument);
}

TEST_CASE("ego progress against the speed-limit reference")
{
  std::vector<Vec2> pts;
  for (double x = -20.0; x <= 100.0; x += 2.0) {
    pts.push_back({x, 0.0});
  }
  Scenario s;
  s.map.lanes.push_back({Polyline(pts), 4.0});
  s.map.route = Polyline(pts);
  s.map.speed_limit = 10.0;
  s.ego_init = {{0.0, 0.0, 0.0}, 0.0, 4.5, 2.0, AgentClass::kVehicle};

  Trajectory stay;
  stay.dt = 0.5;
  stay.waypoints.assign(8, s.ego_init.pose);
  auto roll = rollout_scenario(s, stay, 4.0, 0.1);
  CHECK(compute_ep(roll, s.map.route, s.map.speed_limit) == 0.0);

  s.ego_init.speed = 10.0;
  auto roll_full = rollout_scenario(s, straight_traj(10.0), 4.0, 0.1);
  CHECK(compute_ep(roll_full, s.map.route, s.map.speed_limit) == Catch::Approx(1.0));

  s.ego_init.speed = 5.0;
  auto roll_half = rollout_scenario(s, straight_traj(5.0), 4.0, 0.1);
  CHECK(compute_ep(roll_half, s.map.route, s.map.speed_limit) ==
        Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("score_trajectory composes the individual checks")
{
  Config cfg = Config::desk();
  const Scenario s = generate_scenario(11, Difficulty::kMerge, cfg);
  const SubScores all = score_trajectory(s, s.expert, cfg);
  CHECK(all.nc == 1.0);
  CHECK(all.dac == 1.0);

  const auto roll = rollout_scenario(s, s.expert, s.expert.horizon(), cfg.sim_dt);
  CHECK(all.nc == check_collision(roll, s.map));
  CHECK(all.dac == check_dac(roll, s.map));
  CHECK(all.ttc == compute_ttc(roll, s.map, cfg.ttc_horizon, cfg.sim_dt));
  CHECK(all.comf == compute_comfort(s.expert, cfg.a_lon_max, cfg.a_lat_max, cfg.jerk_max));
  CHECK(all.ep == compute_ep(roll, s.map.route, s.map.speed_limit));

  // teleporting sideways off the road fails dac
  Trajectory off;
  off.dt = 0.5;
  for (int k = 1; k <= cfg.traj_len; ++k) {
    Pose p = s.ego_init.pose;
    p.y += 3.0 * k * 0.5;  // drives perpendicular off the lane
    off.waypoints.push_back(p);
  }
  CHECK(score_trajectory(s, off, cfg).dac == 0.0);

  // determinism
  const SubScores again = score_trajectory(s, s.expert, cfg);
  CHECK(again.nc == all.nc);
  CHECK(again.dac == all.dac);
  CHECK(again.ttc == all.ttc);
  CHECK(again.comf == all.comf);
  CHECK(again.ep == all.ep);
}
