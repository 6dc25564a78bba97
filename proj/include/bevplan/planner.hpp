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

#ifndef BEVPLAN_PLANNER_HPP_
#define BEVPLAN_PLANNER_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bevplan/anchors.hpp"
#include "bevplan/config.hpp"
#include "bevplan/losses.hpp"
#include "bevplan/nn.hpp"
#include "bevplan/ops.hpp"
#include "bevplan/types.hpp"

namespace bevplan
{

/// Final reward per the log-weighted aggregation:
///   -(w1 log r_im + w2 log r_NC + w3 log r_DAC
///     + w4 log(5 r_TTC + 2 r_Comf + 5 r_EP)).
/// Inputs are clamped to >= 1e-7 before the log. Note the leading minus:
/// the value behaves as a cost (it strictly decreases when any component
/// improves), so selection ranks candidates by its negation.
inline double aggregate_reward(double im_prob, double nc, double dac, double ttc, double comf,
                               double ep, const Config & cfg)
{
  const auto clamped = [](double v) { return std::max(v, 1e-7); };
  return -(cfg.w1 * std::log(clamped(im_prob)) + cfg.w2 * std::log(clamped(nc)) +
           cfg.w3 * std::log(clamped(dac)) +
           cfg.w4 * std::log(clamped(5.0 * ttc + 2.0 * comf + 5.0 * ep)));
}

/// Argmax with ties broken by the lowest index.
inline int select_trajectory(const std::vector<double> & rewards)
{
  if (rewards.empty()) {
    throw std::invalid_argument("select_trajectory: empty rewards");
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(rewards.size()); ++i) {
    if (rewards[i] > rewards[best]) {
      best = i;
    }
  }
  return best;
}

/// Observation input: one-hot semantic planes plus two broadcast ego
/// channels (speed / 10, yaw rate).
inline std::vector<double> make_observation_input(const SemanticGrid & grid, double ego_speed,
                                                  double ego_yaw_rate = 0.0)
{
  const std::size_t plane = static_cast<std::size_t>(grid.height) * grid.width;
  std::vector<double> v((kNumSemanticClasses + 2) * plane, 0.0);
  for (std::size_t i = 0; i < plane; ++i) {
    v[grid.cells[i] * plane + i] = 1.0;
  }
  std::fill(v.begin() + kNumSemanticClasses * plane, v.begin() + (kNumSemanticClasses + 1) * plane,
            ego_speed / 10.0);
  std::fill(v.begin() + (kNumSemanticClasses + 1) * plane, v.end(), ego_yaw_rate);
  return v;
}

/// States and action embeddings of one world-model rollout; index 0 holds
/// the inputs. States are token-major [N, hw, c], actions [N, 1, c].
struct RolloutStates
{
  std::vector<ad::Tensor> states;
  std::vector<ad::Tensor> actions;
};

struct RewardOutputs
{
  ad::Tensor im_logits;  // [N, 1] raw; softmaxed across candidates downstream
  ad::Tensor sim;        // [N, 5] sigmoid outputs, order (NC, DAC, TTC, Comf, EP)
};

/// The full learned stack. Parameter creation is deterministic in (config,
/// seed); forward passes run on an explicit Graph so training and inference
/// share one code path.
class PlannerModel
{
public:
  PlannerModel(const Config & cfg, std::uint64_t seed) : cfg_(cfg)
  {
    cfg_.check();
    Rng rng(seed);
    const int c = cfg_.channels;
    const int T = cfg_.traj_len;

    // observation encoder: stride-2 conv chain from (L+2, H, W) to (c, h, w)
    int down_h = cfg_.grid_h / cfg_.state_h;
    int down_w = cfg_.grid_w / cfg_.state_w;
    if (down_h != down_w || down_h <= 0 || (down_h & (down_h - 1)) != 0 ||
        cfg_.state_h * down_h != cfg_.grid_h || cfg_.state_w * down_w != cfg_.grid_w) {
      throw std::invalid_argument("grid size must be state size times a power of two");
    }
    int n_down = 0;
    while ((1 << n_down) < down_h) {
      ++n_down;
    }
    int in_ch = cfg_.grid_classes + 2;
    for (int i = 0; i < n_down; ++i) {
      const int out_ch = (i == n_down - 1) ? c : std::max(8, c >> (n_down - 1 - i));
      enc_convs_.push_back(
          nn::Conv2d::create(store_, "enc.conv" + std::to_string(i), in_ch, out_ch, 3, 2, 1, rng));
      in_ch = out_ch;
    }

    traj_encoder_ = nn::Mlp::create(store_, "te", 2 * T, 4 * c, c, rng);

    refine_q_ = nn::Linear::create(store_, "refine.q", c, c, rng);
    refine_k_ = nn::Linear::create(store_, "refine.k", c, c, rng);
    refine_v_ = nn::Linear::create(store_, "refine.v", c, c, rng);
    refine_o_ = nn::Linear::create(store_, "refine.o", c, c, rng);
    offset_head_ = nn::Mlp::create(store_, "refine.offset", c, 4 * c, 3 * T, rng,
                                   /*zero_last=*/true);

    pos_emb_ = &store_.create("wm.pos", {cfg_.state_h * cfg_.state_w + 1, c});
    nn::init::normal(*pos_emb_, rng, 0.02);

    for (int l = 0; l < cfg_.world_layers; ++l) {
      const std::string base = "wm.layer" + std::to_string(l);
      WorldLayer layer;
      layer.ln1 = nn::LayerNorm::create(store_, base + ".ln1", c);
      layer.wq = nn::Linear::create(store_, base + ".wq", c, c, rng);
      layer.wk = nn::Linear::create(store_, base + ".wk", c, c, rng);
      layer.wv = nn::Linear::create(store_, base + ".wv", c, c, rng);
      layer.wo = nn::Linear::create(store_, base + ".wo", c, c, rng);
      layer.ln2 = nn::LayerNorm::create(store_, base + ".ln2", c);
      layer.ff1 = nn::Linear::create(store_, base + ".ff1", c, cfg_.ffn_multiplier * c, rng);
      layer.ff2 = nn::Linear::create(store_, base + ".ff2", cfg_.ffn_multiplier * c, c, rng);
      wm_layers_.push_back(layer);
    }

    // semantic decoder: transposed-conv chain back to (L, H, W)
    in_ch = c;
    for (int i = 0; i < n_down; ++i) {
      const bool last = (i == n_down - 1);
      const int out_ch = last ? cfg_.grid_classes : std::max(8, c >> (i + 1));
      dec_convs_.push_back(nn::ConvTranspose2d::create(store_, "dec.conv" + std::to_string(i),
                                                       in_ch, out_ch, 4, 2, 1, rng));
      in_ch = out_ch;
    }

    const int stacked = (cfg_.world_steps + 1) * c;
    reward_conv1_ = nn::Conv2d::create(store_, "reward.conv1", stacked, c, 1, 1, 0, rng);
    reward_conv2_ = nn::Conv2d::create(store_, "reward.conv2", c, c, 3, 1, 1, rng);
    action_fuse_ = nn::Mlp::create(store_, "reward.fuse", stacked, 2 * c, c, rng);
    reward_head_ = nn::Mlp::create(store_, "reward.head", 2 * c, 4 * c, 6, rng);
  }

  const Config & config() const { return cfg_; }
  nn::ParamStore & params() { return store_; }

  /// Observation grid + ego channels -> BEV state tokens [hw, c].
  ad::Tensor encode_observation(nn::Graph & g, const SemanticGrid & grid, double ego_speed) const
  {
    if (grid.height != cfg_.grid_h || grid.width != cfg_.grid_w) {
      throw std::invalid_argument("encode_observation: grid does not match config");
    }
    ad::Tensor x = ad::Tensor::leaf({1, cfg_.grid_classes + 2, cfg_.grid_h, cfg_.grid_w},
                                    make_observation_input(grid, ego_speed), false);
    for (std::size_t i = 0; i < enc_convs_.size(); ++i) {
      x = enc_convs_[i].forward(g, x);
      if (i + 1 < enc_convs_.size()) {
        x = ad::relu(x);
      }
    }
    // [1, c, h, w] -> tokens [hw, c]
    x = ad::reshape(x, {cfg_.channels, cfg_.state_h * cfg_.state_w});
    return ad::transpose_last2(x);
  }

  /// Shared trajectory encoder over flattened (x, y) waypoints: [N, 2T] -> [N, c].
  ad::Tensor encode_trajectories(nn::Graph & g, const ad::Tensor & flat_xy) const
  {
    if (flat_xy.shape().back() != 2 * cfg_.traj_len) {
      throw std::invalid_argument("encode_trajectories: expected [N, 2T] input");
    }
    return traj_encoder_.forward(g, flat_xy);
  }

  /// Anchor refinement: tau_hat = tau + MLP(CrossAttention(TE(tau), B, B)).
  /// anchors_pose is [N, T, 3]; the returned tensor matches that shape.
  ad::Tensor refine_trajectories(nn::Graph & g, const ad::Tensor & state_tokens,
                                 const ad::Tensor & anchors_xy,
                                 const ad::Tensor & anchors_pose) const
  {
    const int N = anchors_xy.dim(0);
    const int hw = cfg_.state_h * cfg_.state_w;
    ad::Tensor queries = encode_trajectories(g, anchors_xy);            // [N, c]
    ad::Tensor q = refine_q_.forward(g, queries);                       // [N, c]
    // keys/values from state tokens with positional information
    ad::Tensor keyed = ad::broadcast_add(
        state_tokens, ad::slice(g.use(*pos_emb_), 0, 0, hw));           // [hw, c]
    ad::Tensor k = refine_k_.forward(g, keyed);
    ad::Tensor v = refine_v_.forward(g, keyed);
    // one batch entry: queries attend over all hw state tokens
    ad::Tensor attn = ad::multi_head_attention(ad::reshape(q, {1, N, cfg_.channels}),
                                               ad::reshape(k, {1, hw, cfg_.channels}),
                                               ad::reshape(v, {1, hw, cfg_.channels}), cfg_.heads);
    ad::Tensor fused = refine_o_.forward(g, ad::reshape(attn, {N, cfg_.channels}));
    ad::Tensor offsets = offset_head_.forward(g, fused);               // [N, 3T]
    return ad::add(anchors_pose, ad::reshape(offsets, {N, cfg_.traj_len, 3}));
  }

  /// One recurrent transition: tokens = [state | action] + positional
  /// embedding, through the self-attention layers; first hw tokens are the
  /// next state, the last token the next action embedding.
  std::pair<ad::Tensor, ad::Tensor> world_step(nn::Graph & g, const ad::Tensor & states,
                                               const ad::Tensor & actions) const
  {
    const int N = states.dim(0);
    const int hw = cfg_.state_h * cfg_.state_w;
    const int c = cfg_.channels;
    if (states.dim(1) != hw || states.dim(2) != c || actions.dim(0) != N || actions.dim(1) != 1 ||
        actions.dim(2) != c) {
      throw std::invalid_argument("world_step: bad state/action shapes");
    }
    ad::Tensor x = ad::concat({states, actions}, 1);  // [N, hw+1, c]
    x = ad::broadcast_add(x, g.use(*pos_emb_));
    for (const auto & layer : wm_layers_) {
      ad::Tensor ln = layer.ln1.forward(g, x);
      ad::Tensor attn = ad::multi_head_attention(layer.wq.forward(g, ln), layer.wk.forward(g, ln),
                                                 layer.wv.forward(g, ln), cfg_.heads);
      x = ad::add(x, layer.wo.forward(g, attn));
      ad::Tensor ln2 = layer.ln2.forward(g, x);
      x = ad::add(x, layer.ff2.forward(g, ad::relu(layer.ff1.forward(g, ln2))));
    }
    return {ad::slice(x, 1, 0, hw), ad::slice(x, 1, hw, 1)};
  }

  /// Iterated world_step for all candidates in one batch; index 0 holds the
  /// inputs, so the result has K+1 entries per field.
  RolloutStates rollout_states(nn::Graph & g, const ad::Tensor & states0,
                               const ad::Tensor & actions0, int steps) const
  {
    if (steps < 0) {
      throw std::invalid_argument("rollout_states: steps must be >= 0");
    }
    RolloutStates out;
    out.states.push_back(states0);
    out.actions.push_back(actions0);
    for (int k = 0; k < steps; ++k) {
      auto [s, a] = world_step(g, out.states.back(), out.actions.back());
      out.states.push_back(s);
      out.actions.push_back(a);
    }
    return out;
  }

  /// Decode BEV semantic logits [B, L, H, W] from state tokens [B, hw, c].
  ad::Tensor decode_semantic(nn::Graph & g, const ad::Tensor & states) const
  {
    const int B = states.dim(0);
    ad::Tensor x = ad::transpose_last2(states);  // [B, c, hw]
    x = ad::reshape(x, {B, cfg_.channels, cfg_.state_h, cfg_.state_w});
    for (std::size_t i = 0; i < dec_convs_.size(); ++i) {
      x = dec_convs_[i].forward(g, x);
      if (i + 1 < dec_convs_.size()) {
        x = ad::relu(x);
      }
    }
    return x;  // [B, L, H, W]
  }

  /// Reward head over a whole rollout: channel-concatenated states through
  /// 2D convs and global average pooling, fused with the concatenated action
  /// embeddings, then an MLP to m = 6 outputs.
  RewardOutputs predict_rewards(nn::Graph & g, const RolloutStates & roll) const
  {
    const int c = cfg_.channels;
    if (static_cast<int>(roll.states.size()) != cfg_.world_steps + 1) {
      throw std::invalid_argument("predict_rewards: rollout length does not match config K");
    }
    const int N = roll.states.front().dim(0);
    std::vector<ad::Tensor> planes;
    planes.reserve(roll.states.size());
    for (const auto & s : roll.states) {
      planes.push_back(ad::reshape(ad::transpose_last2(s), {N, c, cfg_.state_h, cfg_.state_w}));
    }
    ad::Tensor b_all = planes.size() == 1 ? planes.front() : ad::concat(planes, 1);
    ad::Tensor feat = ad::relu(reward_conv1_.forward(g, b_all));
    feat = ad::relu(reward_conv2_.forward(g, feat));
    ad::Tensor pooled = ad::mean_pool2d(feat);  // [N, c]

    std::vector<ad::Tensor> acts;
    acts.reserve(roll.actions.size());
    for (const auto & a : roll.actions) {
      acts.push_back(ad::reshape(a, {N, c}));
    }
    ad::Tensor a_all = acts.size() == 1 ? acts.front() : ad::concat(acts, 1);
    ad::Tensor fused = action_fuse_.forward(g, a_all);  // [N, c]

    ad::Tensor s = ad::concat({pooled, fused}, 1);  // [N, 2c]
    ad::Tensor out = reward_head_.forward(g, s);    // [N, 6]
    RewardOutputs r;
    r.im_logits = ad::slice(out, 1, 0, 1);
    r.sim = ad::sigmoid(ad::slice(out, 1, 1, 5));
    return r;
  }

  /// Anchor data as graph leaves: flattened xy [N, 2T] and poses [N, T, 3].
  static std::pair<ad::Tensor, ad::Tensor> anchor_leaves(const AnchorSet & anchors)
  {
    const int N = anchors.count();
    const int T = anchors.traj_len();
    std::vector<double> xy(static_cast<std::size_t>(N) * 2 * T);
    std::vector<double> pose(static_cast<std::size_t>(N) * T * 3);
    for (int i = 0; i < N; ++i) {
      for (int t = 0; t < T; ++t) {
        const Pose & p = anchors.anchors[i].waypoints[t];
        xy[(static_cast<std::size_t>(i) * T + t) * 2 + 0] = p.x;
        xy[(static_cast<std::size_t>(i) * T + t) * 2 + 1] = p.y;
        pose[(static_cast<std::size_t>(i) * T + t) * 3 + 0] = p.x;
        pose[(static_cast<std::size_t>(i) * T + t) * 3 + 1] = p.y;
        pose[(static_cast<std::size_t>(i) * T + t) * 3 + 2] = p.heading;
      }
    }
    return {ad::Tensor::leaf({N, 2 * T}, std::move(xy), false),
            ad::Tensor::leaf({N, T, 3}, std::move(pose), false)};
  }

  /// Extract trajectories from a refined [N, T, 3] tensor, wrapping headings.
  std::vector<Trajectory> trajectories_from_tensor(const ad::Tensor & refined) const
  {
    const int N = refined.dim(0);
    const int T = refined.dim(1);
    std::vector<Trajectory> out(N);
    for (int i = 0; i < N; ++i) {
      out[i].dt = cfg_.traj_dt;
      out[i].waypoints.resize(T);
      for (int t = 0; t < T; ++t) {
        const std::size_t base = (static_cast<std::size_t>(i) * T + t) * 3;
        out[i].waypoints[t] = {refined.value()[base], refined.value()[base + 1],
                               wrap_angle(refined.value()[base + 2])};
      }
    }
    return out;
  }

  /// xy leaf [N, 2T] from arbitrary trajectories (for TE at evaluation time).
  static ad::Tensor trajectories_xy_leaf(const std::vector<Trajectory> & trajs)
  {
    const int N = static_cast<int>(trajs.size());
    const int T = trajs.front().size();
    std::vector<double> xy(static_cast<std::size_t>(N) * 2 * T);
    for (int i = 0; i < N; ++i) {
      for (int t = 0; t < T; ++t) {
        xy[(static_cast<std::size_t>(i) * T + t) * 2 + 0] = trajs[i].waypoints[t].x;
        xy[(static_cast<std::size_t>(i) * T + t) * 2 + 1] = trajs[i].waypoints[t].y;
      }
    }
    return ad::Tensor::leaf({N, 2 * T}, std::move(xy), false);
  }

private:
  struct WorldLayer
  {
    nn::LayerNorm ln1;
    nn::Linear wq, wk, wv, wo;
    nn::LayerNorm ln2;
    nn::Linear ff1, ff2;
  };

  Config cfg_;
  nn::ParamStore store_;
  std::vector<nn::Conv2d> enc_convs_;
  nn::Mlp traj_encoder_;
  nn::Linear refine_q_, refine_k_, refine_v_, refine_o_;
  nn::Mlp offset_head_;
  nn::Param * pos_emb_{nullptr};
  std::vector<WorldLayer> wm_layers_;
  std::vector<nn::ConvTranspose2d> dec_convs_;
  nn::Conv2d reward_conv1_, reward_conv2_;
  nn::Mlp action_fuse_;
  nn::Mlp reward_head_;
};

}  // namespace bevplan

#endif  // BEVPLAN_PLANNER_HPP_
