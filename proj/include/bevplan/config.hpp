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

#ifndef BEVPLAN_CONFIG_HPP_
#define BEVPLAN_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "bevplan/random.hpp"

namespace bevplan
{

/// Everything that shapes the model, the simulator thresholds, and training.
/// The static defaults follow the reference setting (256 anchors, 8x8x64
/// state, two recurrent steps, lr 1e-4); experiment configs scale them down.
struct Config
{
  // trajectory representation
  int traj_len{8};       // T waypoints
  double traj_dt{0.5};   // seconds between waypoints
  double v_max{20.0};    // waypoint spacing bound, m/s

  // simulation
  double sim_dt{0.1};

  // BEV grid
  int grid_h{128};
  int grid_w{128};
  int grid_classes{7};
  double grid_resolution{0.5};

  // latent state
  int state_h{8};
  int state_w{8};
  int channels{64};

  // planner
  int num_anchors{256};
  int world_steps{2};            // K recurrent steps
  double world_step_seconds{2.0};
  int heads{4};
  int world_layers{2};
  int ffn_multiplier{2};

  // reward aggregation weights (w1..w4)
  double w1{0.1};
  double w2{0.5};
  double w3{0.5};
  double w4{1.0};

  // rule-based scorer thresholds
  double ttc_horizon{1.0};
  double a_lon_max{4.0};
  double a_lat_max{4.0};
  double jerk_max{8.0};

  // losses
  double focal_gamma{2.0};
  double focal_alpha{0.25};
  bool bev_winner_only{false};  // supervise future maps of all anchors by default

  // optimization
  double lr{1e-4};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_eps{1e-8};
  int epochs{20};
  int batch_size{8};

  double horizon() const { return traj_len * traj_dt; }

  nlohmann::json to_json() const
  {
    return nlohmann::json{
        {"T", traj_len},
        {"dt", traj_dt},
        {"v_max", v_max},
        {"sim_dt", sim_dt},
        {"grid", {{"H", grid_h}, {"W", grid_w}, {"L", grid_classes}, {"resolution", grid_resolution}}},
        {"h", state_h},
        {"w", state_w},
        {"c", channels},
        {"N", num_anchors},
        {"K", world_steps},
        {"world_step_seconds", world_step_seconds},
        {"heads", heads},
        {"layers", world_layers},
        {"ffn_multiplier", ffn_multiplier},
        {"weights", {{"w1", w1}, {"w2", w2}, {"w3", w3}, {"w4", w4}}},
        {"thresholds",
         {{"ttc_horizon", ttc_horizon},
          {"a_lon_max", a_lon_max},
          {"a_lat_max", a_lat_max},
          {"jerk_max", jerk_max}}},
        {"focal", {{"gamma", focal_gamma}, {"alpha", focal_alpha}}},
        {"bev_winner_only", bev_winner_only},
        {"optim",
         {{"lr", lr},
          {"beta1", adam_beta1},
          {"beta2", adam_beta2},
          {"eps", adam_eps},
          {"epochs", epochs},
          {"batch_size", batch_size}}},
    };
  }

  static Config from_json(const nlohmann::json & j)
  {
    Config c;
    c.traj_len = j.value("T", c.traj_len);
    c.traj_dt = j.value("dt", c.traj_dt);
    c.v_max = j.value("v_max", c.v_max);
    c.sim_dt = j.value("sim_dt", c.sim_dt);
    if (j.contains("grid")) {
      const auto & g = j.at("grid");
      c.grid_h = g.value("H", c.grid_h);
      c.grid_w = g.value("W", c.grid_w);
      c.grid_classes = g.value("L", c.grid_classes);
      c.grid_resolution = g.value("resolution", c.grid_resolution);
    }
    c.state_h = j.value("h", c.state_h);
    c.state_w = j.value("w", c.state_w);
    c.channels = j.value("c", c.channels);
    c.num_anchors = j.value("N", c.num_anchors);
    c.world_steps = j.value("K", c.world_steps);
    c.world_step_seconds = j.value("world_step_seconds", c.world_step_seconds);
    c.heads = j.value("heads", c.heads);
    c.world_layers = j.value("layers", c.world_layers);
    c.ffn_multiplier = j.value("ffn_multiplier", c.ffn_multiplier);
    if (j.contains("weights")) {
      const auto & w = j.at("weights");
      c.w1 = w.value("w1", c.w1);
      c.w2 = w.value("w2", c.w2);
      c.w3 = w.value("w3", c.w3);
      c.w4 = w.value("w4", c.w4);
    }
    if (j.contains("thresholds")) {
      const auto & t = j.at("thresholds");
      c.ttc_horizon = t.value("ttc_horizon", c.ttc_horizon);
      c.a_lon_max = t.value("a_lon_max", c.a_lon_max);
      c.a_lat_max = t.value("a_lat_max", c.a_lat_max);
      c.jerk_max = t.value("jerk_max", c.jerk_max);
    }
    if (j.contains("focal")) {
      c.focal_gamma = j.at("focal").value("gamma", c.focal_gamma);
      c.focal_alpha = j.at("focal").value("alpha", c.focal_alpha);
    }
    c.bev_winner_only = j.value("bev_winner_only", c.bev_winner_only);
    if (j.contains("optim")) {
      const auto & o = j.at("optim");
      c.lr = o.value("lr", c.lr);
      c.adam_beta1 = o.value("beta1", c.adam_beta1);
      c.adam_beta2 = o.value("beta2", c.adam_beta2);
      c.adam_eps = o.value("eps", c.adam_eps);
      c.epochs = o.value("epochs", c.epochs);
      c.batch_size = o.value("batch_size", c.batch_size);
    }
    c.check();
    return c;
  }

  static Config load(const std::string & path)
  {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("cannot open config file: " + path);
    }
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

  void save(const std::string & path) const
  {
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot write config file: " + path);
    }
    out << to_json().dump(2) << "\n";
  }

  void check() const
  {
    if (traj_len < 1 || traj_dt <= 0.0 || sim_dt <= 0.0) {
      throw std::invalid_argument("invalid trajectory/sim timing config");
    }
    if (grid_h <= 0 || grid_w <= 0 || grid_classes != 7) {
      throw std::invalid_argument("invalid grid config");
    }
    if (state_h <= 0 || state_w <= 0 || channels <= 0 || channels % heads != 0) {
      throw std::invalid_argument("invalid latent state config");
    }
    if (num_anchors < 1 || world_steps < 0) {
      throw std::invalid_argument("invalid planner config");
    }
  }

  /// Fingerprint of the canonical JSON form; stored in checkpoint headers.
  std::uint64_t hash() const
  {
    const std::string s = to_json().dump();
    return fnv1a64(s.data(), s.size());
  }

  /// Scaled-down setting used by the training/ablation experiments.
  static Config desk()
  {
    Config c;
    c.grid_h = 32;
    c.grid_w = 32;
    c.grid_resolution = 2.0;
    c.channels = 32;
    c.num_anchors = 32;
    return c;
  }
};

}  // namespace bevplan

#endif  // BEVPLAN_CONFIG_HPP_
