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

#ifndef BEVPLAN_ANCHORS_HPP_
#define BEVPLAN_ANCHORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bevplan/random.hpp"
#include "bevplan/types.hpp"

namespace bevplan
{

/// The trajectory vocabulary: N ego-relative trajectories sharing T and dt.
struct AnchorSet
{
  std::vector<Trajectory> anchors;

  int count() const { return static_cast<int>(anchors.size()); }
  int traj_len() const { return anchors.empty() ? 0 : anchors.front().size(); }
  double dt() const { return anchors.empty() ? 0.0 : anchors.front().dt; }

  /// Fingerprint over the (x, y) content; ties training targets to the set.
  std::uint64_t hash() const
  {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto & traj : anchors) {
      for (const auto & p : traj.waypoints) {
        h = fnv1a64(&p.x, sizeof(double), h);
        h = fnv1a64(&p.y, sizeof(double), h);
      }
    }
    return h;
  }
};

namespace anchor_detail
{

inline std::vector<double> flatten_xy(const Trajectory & traj)
{
  std::vector<double> v;
  v.reserve(2 * traj.waypoints.size());
  for (const auto & p : traj.waypoints) {
    v.push_back(p.x);
    v.push_back(p.y);
  }
  return v;
}

inline double squared_distance(const std::vector<double> & a, const std::vector<double> & b)
{
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

/// Headings are recomputed from consecutive waypoints; the implicit start at
/// the origin anchors the first segment. Degenerate segments keep the
/// previous heading.
inline void recompute_headings(Trajectory & traj)
{
  double prev_heading = 0.0;
  Vec2 prev{0.0, 0.0};
  for (std::size_t i = 0; i < traj.waypoints.size(); ++i) {
    const Vec2 cur = traj.waypoints[i].position();
    const Vec2 d = cur - prev;
    if (d.norm() > 1e-9) {
      prev_heading = std::atan2(d.y, d.x);
    }
    traj.waypoints[i].heading = prev_heading;
    prev = cur;
  }
}

}  // namespace anchor_detail

/// K-means over flattened (x, y) waypoint vectors with k-means++ seeding.
/// Lloyd iterations stop at 100 rounds or relative inertia change < 1e-6;
/// empty clusters are reseeded to the point farthest from its centroid.
inline AnchorSet cluster_anchors(const std::vector<Trajectory> & experts, int n_anchors,
                                 std::uint64_t seed)
{
  using namespace anchor_detail;
  const int m = static_cast<int>(experts.size());
  if (m < n_anchors) {
    throw std::invalid_argument("cluster_anchors: need at least N expert trajectories");
  }
  const int T = experts.front().size();
  const double dt = experts.front().dt;
  for (const auto & e : experts) {
    if (e.size() != T || e.dt != dt) {
      throw std::invalid_argument("cluster_anchors: expert trajectories must share T and dt");
    }
  }
  const int dim = 2 * T;
  std::vector<std::vector<double>> pts(m);
  for (int i = 0; i < m; ++i) {
    pts[i] = flatten_xy(experts[i]);
  }

  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  centers.reserve(n_anchors);

  // k-means++ seeding
  centers.push_back(pts[rng.uniform_index(m)]);
  std::vector<double> d2(m);
  while (static_cast<int>(centers.size()) < n_anchors) {
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto & c : centers) {
        best = std::min(best, squared_distance(pts[i], c));
      }
      d2[i] = best;
      total += best;
    }
    int pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = m - 1;
      for (int i = 0; i < m; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_index(m));
    }
    centers.push_back(pts[pick]);
  }

  std::vector<int> assign(m, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 100; ++iter) {
    double inertia = 0.0;
    for (int i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (int k = 0; k < n_anchors; ++k) {
        const double d = squared_distance(pts[i], centers[k]);
        if (d < best) {
          best = d;
          best_k = k;
        }
      }
      assign[i] = best_k;
      inertia += best;
    }

    std::vector<std::vector<double>> sums(n_anchors, std::vector<double>(dim, 0.0));
    std::vector<int> counts(n_anchors, 0);
    for (int i = 0; i < m; ++i) {
      ++counts[assign[i]];
      for (int d = 0; d < dim; ++d) {
        sums[assign[i]][d] += pts[i][d];
      }
    }
    for (int k = 0; k < n_anchors; ++k) {
      if (counts[k] == 0) {
        // reseed to the point farthest from its own centroid
        double worst = -1.0;
        int worst_i = 0;
        for (int i = 0; i < m; ++i) {
          const double d = squared_distance(pts[i], centers[assign[i]]);
          if (d > worst) {
            worst = d;
            worst_i = i;
          }
        }
        centers[k] = pts[worst_i];
        assign[worst_i] = k;
      } else {
        for (int d = 0; d < dim; ++d) {
          centers[k][d] = sums[k][d] / counts[k];
        }
      }
    }

    if (prev_inertia < std::numeric_limits<double>::infinity()) {
      const double denom = std::max(prev_inertia, 1e-12);
      if (std::abs(prev_inertia - inertia) / denom < 1e-6) {
        break;
      }
    }
    prev_inertia = inertia;
  }

  AnchorSet set;
  set.anchors.reserve(n_anchors);
  for (int k = 0; k < n_anchors; ++k) {
    Trajectory traj;
    traj.dt = dt;
    traj.waypoints.resize(T);
    for (int t = 0; t < T; ++t) {
      traj.waypoints[t].x = centers[k][2 * t];
      traj.waypoints[t].y = centers[k][2 * t + 1];
    }
    recompute_headings(traj);
    set.anchors.push_back(std::move(traj));
  }
  return set;
}

/// Per-anchor L2 distance to the expert over all waypoint (x, y) offsets.
inline std::vector<double> anchor_distances(const AnchorSet & anchors, const Trajectory & expert)
{
  std::vector<double> d(anchors.count());
  for (int i = 0; i < anchors.count(); ++i) {
    const auto & a = anchors.anchors[i];
    if (a.size() != expert.size()) {
      throw std::invalid_argument("anchor_distances: shape mismatch");
    }
    double s = 0.0;
    for (int t = 0; t < expert.size(); ++t) {
      const double dx = a.waypoints[t].x - expert.waypoints[t].x;
      const double dy = a.waypoints[t].y - expert.waypoints[t].y;
      s += dx * dx + dy * dy;
    }
    d[i] = std::sqrt(s);
  }
  return d;
}

/// Softmax over negative distances: anchors closer to the expert get more mass.
inline std::vector<double> imitation_target(const AnchorSet & anchors, const Trajectory & expert)
{
  const std::vector<double> d = anchor_distances(anchors, expert);
  double lo = std::numeric_limits<double>::infinity();
  for (double v : d) {
    lo = std::min(lo, v);
  }
  std::vector<double> out(d.size());
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    out[i] = std::exp(lo - d[i]);
    total += out[i];
  }
  for (double & v : out) {
    v /= total;
  }
  return out;
}

inline int nearest_anchor(const AnchorSet & anchors, const Trajectory & expert)
{
  const std::vector<double> d = anchor_distances(anchors, expert);
  int best = 0;
  for (int i = 1; i < static_cast<int>(d.size()); ++i) {
    if (d[i] < d[best]) {
      best = i;
    }
  }
  return best;
}

/// Anchor CSV: header, one row per (anchor_id, step).
inline void save_anchors_csv(const AnchorSet & anchors, const std::string & path)
{
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write anchors file: " + path);
  }
  out << "anchor_id,step,x,y,heading\n";
  char buf[160];
  for (int i = 0; i < anchors.count(); ++i) {
    const auto & traj = anchors.anchors[i];
    for (int t = 0; t < traj.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", i, t, traj.waypoints[t].x,
                    traj.waypoints[t].y, traj.waypoints[t].heading);
      out << buf;
    }
  }
}

inline AnchorSet load_anchors_csv(const std::string & path, double dt)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open anchors file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty anchors file: " + path);
  }
  AnchorSet set;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    int id, step;
    double x, y, heading;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &id, &step, &x, &y, &heading) != 5) {
      throw std::runtime_error("bad anchor row: " + line);
    }
    if (id == static_cast<int>(set.anchors.size())) {
      set.anchors.push_back(Trajectory{{}, dt});
    }
    if (id >= static_cast<int>(set.anchors.size())) {
      throw std::runtime_error("anchor ids must be contiguous: " + line);
    }
    set.anchors[id].waypoints.push_back({x, y, heading});
  }
  if (set.anchors.empty()) {
    throw std::runtime_error("anchors file has no rows: " + path);
  }
  return set;
}

}  // namespace bevplan

#endif  // BEVPLAN_ANCHORS_HPP_
