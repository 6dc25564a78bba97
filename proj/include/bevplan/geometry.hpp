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

#ifndef BEVPLAN_GEOMETRY_HPP_
#define BEVPLAN_GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bevplan
{

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a)
{
  if (a > -kPi && a <= kPi) {
    return a;  // already in range; keep the value bit-exact
  }
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) {
    a += 2.0 * kPi;
  }
  return a - kPi;
}

/// Shortest signed angular difference a - b, wrapped to (-pi, pi].
inline double angle_diff(double a, double b)
{
  return wrap_angle(a - b);
}

struct Vec2
{
  double x{0.0};
  double y{0.0};

  Vec2 operator+(const Vec2 & o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2 & o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2 & o) const { return x * o.x + y * o.y; }
  double cross(const Vec2 & o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

struct Pose
{
  double x{0.0};
  double y{0.0};
  double heading{0.0};

  Vec2 position() const { return {x, y}; }
  Vec2 forward() const { return {std::cos(heading), std::sin(heading)}; }
};

/// Express `p` in the coordinate frame defined by `frame` (+x forward, +y left).
inline Pose transform_to_frame(const Pose & p, const Pose & frame)
{
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  const double dx = p.x - frame.x;
  const double dy = p.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(p.heading - frame.heading)};
}

/// Inverse of transform_to_frame: map a frame-local pose back to world coordinates.
inline Pose transform_from_frame(const Pose & p, const Pose & frame)
{
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {frame.x + c * p.x - s * p.y, frame.y + s * p.x + c * p.y,
          wrap_angle(p.heading + frame.heading)};
}

inline Vec2 point_to_frame(const Vec2 & p, const Pose & frame)
{
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  const double dx = p.x - frame.x;
  const double dy = p.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

/// Linear pose interpolation: positions lerped, heading slerped the short way.
inline Pose interpolate_pose(const Pose & a, const Pose & b, double t)
{
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t,
          wrap_angle(a.heading + angle_diff(b.heading, a.heading) * t)};
}

struct PolylineProjection
{
  double arc_length{0.0};   // along the polyline from its start
  double lateral{0.0};      // signed offset, positive to the left of travel
  double distance{0.0};     // euclidean distance to the closest point
};

/// Piecewise-linear path with cached cumulative arc lengths and smoothed
/// per-vertex tangent headings (average of adjacent segment directions).
class Polyline
{
public:
  Polyline() = default;

  explicit Polyline(std::vector<Vec2> points) : pts_(std::move(points))
  {
    if (pts_.size() < 2) {
      throw std::invalid_argument("polyline needs at least 2 points");
    }
    cum_.resize(pts_.size(), 0.0);
    seg_heading_.resize(pts_.size() - 1, 0.0);
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const Vec2 d = pts_[i + 1] - pts_[i];
      cum_[i + 1] = cum_[i] + d.norm();
      seg_heading_[i] = std::atan2(d.y, d.x);
    }
    vertex_heading_.resize(pts_.size());
    vertex_heading_.front() = seg_heading_.front();
    vertex_heading_.back() = seg_heading_.back();
    for (std::size_t i = 1; i + 1 < pts_.size(); ++i) {
      const double h0 = seg_heading_[i - 1];
      vertex_heading_[i] = wrap_angle(h0 + 0.5 * angle_diff(seg_heading_[i], h0));
    }
  }

  const std::vector<Vec2> & points() const { return pts_; }
  double length() const { return cum_.back(); }

  /// Point at arc length s; linearly extrapolated beyond either end.
  Vec2 point_at(double s) const
  {
    if (s <= 0.0) {
      const Vec2 d = direction(0);
      return pts_.front() + d * s;
    }
    if (s >= length()) {
      const Vec2 d = direction(pts_.size() - 2);
      return pts_.back() + d * (s - length());
    }
    const std::size_t i = segment_index(s);
    const double t = (s - cum_[i]) / (cum_[i + 1] - cum_[i]);
    return pts_[i] + (pts_[i + 1] - pts_[i]) * t;
  }

  /// Tangent heading at arc length s, interpolated between vertex headings.
  double heading_at(double s) const
  {
    if (s <= 0.0) {
      return vertex_heading_.front();
    }
    if (s >= length()) {
      return vertex_heading_.back();
    }
    const std::size_t i = segment_index(s);
    const double t = (s - cum_[i]) / (cum_[i + 1] - cum_[i]);
    return wrap_angle(vertex_heading_[i] +
                      angle_diff(vertex_heading_[i + 1], vertex_heading_[i]) * t);
  }

  /// Unit normal (left of travel) at arc length s.
  Vec2 normal_at(double s) const
  {
    const double h = heading_at(s);
    return {-std::sin(h), std::cos(h)};
  }

  PolylineProjection project(const Vec2 & p) const
  {
    PolylineProjection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const Vec2 a = pts_[i];
      const Vec2 ab = pts_[i + 1] - a;
      const double len2 = ab.squared_norm();
      double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const Vec2 q = a + ab * t;
      const double d = (p - q).norm();
      if (d < best.distance) {
        best.distance = d;
        best.arc_length = cum_[i] + t * std::sqrt(len2);
        const double seglen = std::sqrt(len2);
        const Vec2 dir = seglen > 0.0 ? ab * (1.0 / seglen) : Vec2{1.0, 0.0};
        best.lateral = dir.cross(p - q);
      }
    }
    return best;
  }

private:
  Vec2 direction(std::size_t seg) const
  {
    const Vec2 d = pts_[seg + 1] - pts_[seg];
    const double n = d.norm();
    return n > 0.0 ? d * (1.0 / n) : Vec2{1.0, 0.0};
  }

  std::size_t segment_index(double s) const
  {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    if (i == 0) {
      return 0;
    }
    return std::min(i - 1, pts_.size() - 2);
  }

  std::vector<Vec2> pts_;
  std::vector<double> cum_;
  std::vector<double> seg_heading_;
  std::vector<double> vertex_heading_;
};

/// Simple (non-self-intersecting) polygon; boundary counts as inside.
class Polygon
{
public:
  Polygon() = default;
  explicit Polygon(std::vector<Vec2> points) : pts_(std::move(points)) {}

  const std::vector<Vec2> & points() const { return pts_; }

  bool contains(const Vec2 & p, double boundary_eps = 1e-9) const
  {
    const std::size_t n = pts_.size();
    if (n < 3) {
      return false;
    }
    // On-edge check first so the region is closed.
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = pts_[i];
      const Vec2 b = pts_[(i + 1) % n];
      const Vec2 ab = b - a;
      const double len2 = ab.squared_norm();
      const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      if ((p - (a + ab * t)).norm() <= boundary_eps) {
        return true;
      }
    }
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 & a = pts_[i];
      const Vec2 & b = pts_[j];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (p.x < xint) {
          inside = !inside;
        }
      }
    }
    return inside;
  }

  double area() const
  {
    double twice = 0.0;
    const std::size_t n = pts_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      twice += pts_[j].cross(pts_[i]);
    }
    return 0.5 * std::abs(twice);
  }

  std::array<Vec2, 2> bounding_box() const
  {
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-lo.x, -lo.y};
    for (const auto & p : pts_) {
      lo.x = std::min(lo.x, p.x);
      lo.y = std::min(lo.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
    return {lo, hi};
  }

private:
  std::vector<Vec2> pts_;
};

/// Axis-aligned-in-body rectangle centered on a pose.
struct OrientedBox
{
  Pose pose;
  double length{0.0};  // extent along heading
  double width{0.0};   // extent across heading

  std::array<Vec2, 4> corners() const
  {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    const double hl = 0.5 * length;
    const double hw = 0.5 * width;
    const Vec2 fx{c * hl, s * hl};
    const Vec2 fy{-s * hw, c * hw};
    const Vec2 ctr{pose.x, pose.y};
    return {ctr + fx + fy, ctr + fx - fy, ctr - fx - fy, ctr - fx + fy};
  }

  Polygon polygon() const
  {
    const auto cs = corners();
    return Polygon(std::vector<Vec2>(cs.begin(), cs.end()));
  }
};

namespace detail
{
inline void project_onto(const std::array<Vec2, 4> & corners, const Vec2 & axis, double & lo,
                         double & hi)
{
  lo = hi = corners[0].dot(axis);
  for (int i = 1; i < 4; ++i) {
    const double v = corners[i].dot(axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
}
}  // namespace detail

/// Separating-axis intersection test; tangential contact does not count.
inline bool boxes_overlap(const OrientedBox & a, const OrientedBox & b)
{
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {
      Vec2{std::cos(a.pose.heading), std::sin(a.pose.heading)},
      Vec2{-std::sin(a.pose.heading), std::cos(a.pose.heading)},
      Vec2{std::cos(b.pose.heading), std::sin(b.pose.heading)},
      Vec2{-std::sin(b.pose.heading), std::cos(b.pose.heading)}};
  constexpr double eps = 1e-12;
  for (const auto & axis : axes) {
    double alo, ahi, blo, bhi;
    detail::project_onto(ca, axis, alo, ahi);
    detail::project_onto(cb, axis, blo, bhi);
    if (ahi <= blo + eps || bhi <= alo + eps) {
      return false;
    }
  }
  return true;
}

/// Lane footprint: centerline swept by +-width/2 along the smoothed normals.
inline Polygon lane_polygon(const Polyline & centerline, double width)
{
  std::vector<Vec2> left;
  std::vector<Vec2> right;
  const auto & pts = centerline.points();
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) {
      s += (pts[i] - pts[i - 1]).norm();
    }
    const Vec2 n = centerline.normal_at(std::min(s, centerline.length()));
    left.push_back(pts[i] + n * (0.5 * width));
    right.push_back(pts[i] - n * (0.5 * width));
  }
  std::vector<Vec2> ring = std::move(left);
  ring.insert(ring.end(), right.rbegin(), right.rend());
  return Polygon(std::move(ring));
}

}  // namespace bevplan

#endif  // BEVPLAN_GEOMETRY_HPP_
