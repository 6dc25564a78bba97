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

#include "bevplan/geometry.hpp"
#include "bevplan/random.hpp"

using namespace bevplan;

TEST_CASE("wrap_angle maps into (-pi, pi]")
{
  CHECK(wrap_angle(0.0) == Catch::Approx(0.0));
  CHECK(wrap_angle(kPi) == Catch::Approx(kPi));
  CHECK(wrap_angle(-kPi) == Catch::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == Catch::Approx(kPi));
  CHECK(wrap_angle(2.0 * kPi + 0.25) == Catch::Approx(0.25));
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-9);
    CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-9);
  }
}

TEST_CASE("transform_to_frame identities")
{
  const Pose p{3.5, -2.0, 0.7};
  const Pose self = transform_to_frame(p, p);
  CHECK(self.x == Catch::Approx(0.0).margin(1e-12));
  CHECK(self.y == Catch::Approx(0.0).margin(1e-12));
  CHECK(self.heading == Catch::Approx(0.0).margin(1e-12));

  const Pose origin{0.0, 0.0, 0.0};
  const Pose same = transform_to_frame(p, origin);
  CHECK(same.x == p.x);
  CHECK(same.y == p.y);
  CHECK(same.heading == p.heading);
}

TEST_CASE("transform round-trips through a frame")
{
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Pose p{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0), rng.uniform(-3.0, 3.0)};
    const Pose f{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0), rng.uniform(-3.0, 3.0)};
    const Pose back = transform_from_frame(transform_to_frame(p, f), f);
    CHECK(back.x == Catch::Approx(p.x).margin(1e-9));
    CHECK(back.y == Catch::Approx(p.y).margin(1e-9));
    CHECK(std::abs(angle_diff(back.heading, p.heading)) < 1e-9);
  }
}

TEST_CASE("polyline arc-length lookup and projection")
{
  Polyline line({{0.0, 0.0}, {10.0, 0.0}, {10.0, 10.0}});
  CHECK(line.length() == Catch::Approx(20.0));
  const Vec2 mid = line.point_at(5.0);
  CHECK(mid.x == Catch::Approx(5.0));
  CHECK(mid.y == Catch::Approx(0.0));
  const Vec2 up = line.point_at(15.0);
  CHECK(up.x == Catch::Approx(10.0));
  CHECK(up.y == Catch::Approx(5.0));
  // extrapolation beyond the end continues along the last segment
  const Vec2 beyond = line.point_at(25.0);
  CHECK(beyond.x == Catch::Approx(10.0));
  CHECK(beyond.y == Catch::Approx(15.0));

  const auto proj = line.project({4.0, 3.0});
  CHECK(proj.arc_length == Catch::Approx(4.0));
  CHECK(proj.distance == Catch::Approx(3.0));
  CHECK(proj.lateral == Catch::Approx(3.0));  // left of travel
  const auto proj_right = line.project({4.0, -3.0});
  CHECK(proj_right.lateral == Catch::Approx(-3.0));
}

TEST_CASE("polygon containment includes the boundary")
{
  Polygon box({{0.0, 0.0}, {4.0, 0.0}, {4.0, 2.0}, {0.0, 2.0}});
  CHECK(box.contains({2.0, 1.0}));
  CHECK(box.contains({0.0, 1.0}));   // on an edge
  CHECK(box.contains({4.0, 2.0}));   // on a corner
  CHECK_FALSE(box.contains({4.1, 1.0}));
  CHECK_FALSE(box.contains({-0.001, 1.0}));
  CHECK(box.area() == Catch::Approx(8.0));
}

TEST_CASE("oriented box overlap via separating axes")
{
  OrientedBox a{{0.0, 0.0, 0.0}, 4.0, 2.0};
  OrientedBox b{{3.0, 0.0, 0.0}, 4.0, 2.0};
  CHECK(boxes_overlap(a, b));
  OrientedBox c{{10.0, 0.0, 0.0}, 4.0, 2.0};
  CHECK_FALSE(boxes_overlap(a, c));
  // rotated box slipping between: diagonal neighbor that only meets corners
  OrientedBox d{{3.0, 2.2, kPi / 4.0}, 4.0, 2.0};
  CHECK(boxes_overlap(a, d));
  OrientedBox e{{4.2, 3.4, kPi / 4.0}, 4.0, 2.0};
  CHECK_FALSE(boxes_overlap(a, e));
  // exact tangential contact does not count as overlap
  OrientedBox f{{4.0, 0.0, 0.0}, 4.0, 2.0};
  CHECK_FALSE(boxes_overlap(a, f));
}

TEST_CASE("lane polygon covers the swept corridor")
{
  Polyline center({{0.0, 0.0}, {20.0, 0.0}});
  const Polygon lane = lane_polygon(center, 4.0);
  CHECK(lane.contains({10.0, 1.9}));
  CHECK(lane.contains({10.0, -1.9}));
  CHECK(lane.contains({10.0, 2.0}));  // boundary
  CHECK_FALSE(lane.contains({10.0, 2.1}));
  CHECK(lane.area() == Catch::Approx(80.0).epsilon(0.01));
}

TEST_CASE("interpolate_pose takes the short angular path")
{
  const Pose a{0.0, 0.0, kPi - 0.1};
  const Pose b{1.0, 0.0, -kPi + 0.1};
  const Pose mid = interpolate_pose(a, b, 0.5);
  CHECK(std::abs(mid.heading) == Catch::Approx(kPi).margin(1e-9));
}
