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

#ifndef BEVPLAN_LOSSES_HPP_
#define BEVPLAN_LOSSES_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bevplan/geometry.hpp"
#include "bevplan/ops.hpp"
#include "bevplan/tensor.hpp"

namespace bevplan::ad
{

inline constexpr double kProbFloor = 1e-7;

/// Focal loss over per-cell class logits [L, H*W...] (channel-major) against
/// target class indices. Mean over cells of -alpha*(1-p_t)^gamma*log(p_t),
/// with p_t clamped to [1e-7, 1].
inline Tensor focal_loss(const Tensor & logits, const std::vector<std::uint8_t> & target,
                         double gamma, double alpha)
{
  if (logits.shape().empty()) {
    throw std::invalid_argument("focal_loss: logits must be [L, cells...]");
  }
  const int L = logits.dim(0);
  const std::size_t cells = logits.numel() / L;
  if (target.size() != cells) {
    throw std::invalid_argument("focal_loss: target cell count mismatch");
  }
  // softmax per cell over the class axis (stride = cells)
  std::vector<double> probs(logits.numel());
  const double * x = logits.value().data();
  for (std::size_t i = 0; i < cells; ++i) {
    double mx = x[i];
    for (int l = 1; l < L; ++l) {
      mx = std::max(mx, x[l * cells + i]);
    }
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
      const double e = std::exp(x[l * cells + i] - mx);
      probs[l * cells + i] = e;
      total += e;
    }
    for (int l = 0; l < L; ++l) {
      probs[l * cells + i] /= total;
    }
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double pt = std::max(probs[target[i] * cells + i], kProbFloor);
    loss += -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
  }
  loss /= static_cast<double>(cells);

  return make_op({1}, {loss}, {logits},
                 [L, cells, gamma, alpha, probs = std::move(probs), target](Node & n) {
                   const double g = n.grad[0] / static_cast<double>(cells);
                   double * gx = n.parents[0]->grad.data();
                   for (std::size_t i = 0; i < cells; ++i) {
                     const double pt_raw = probs[target[i] * cells + i];
                     const double pt = std::max(pt_raw, kProbFloor);
                     // dL/dpt, zero in the clamped region
                     double dldpt = 0.0;
                     if (pt_raw > kProbFloor) {
                       const double om = 1.0 - pt;
                       dldpt = -alpha * (std::pow(om, gamma) / pt -
                                         (gamma > 0.0
                                              ? gamma * std::pow(om, gamma - 1.0) * std::log(pt)
                                              : 0.0));
                     }
                     // chain through softmax: dpt/dx_l = pt*(delta - p_l)
                     const double common = dldpt * pt_raw;
                     for (int l = 0; l < L; ++l) {
                       const double delta = (l == target[i]) ? 1.0 : 0.0;
                       gx[l * cells + i] += g * common * (delta - probs[l * cells + i]);
                     }
                   }
                 });
}

/// Mean binary cross entropy over sigmoid outputs, clamped away from {0,1}.
inline Tensor bce_loss(const Tensor & pred, const std::vector<double> & target)
{
  if (pred.numel() != target.size()) {
    throw std::invalid_argument("bce_loss: size mismatch");
  }
  const std::size_t m = pred.numel();
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = std::clamp(pred.value()[i], kProbFloor, 1.0 - kProbFloor);
    loss += -(target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p));
  }
  loss /= static_cast<double>(m);
  return make_op({1}, {loss}, {pred}, [m, target](Node & n) {
    const double g = n.grad[0] / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double raw = n.parents[0]->value[i];
      if (raw <= kProbFloor || raw >= 1.0 - kProbFloor) {
        continue;
      }
      n.parents[0]->grad[i] += g * (-target[i] / raw + (1.0 - target[i]) / (1.0 - raw));
    }
  });
}

/// Cross entropy of softmax(logits) against a target distribution.
inline Tensor ce_loss(const Tensor & logits, const std::vector<double> & target)
{
  if (logits.numel() != target.size()) {
    throw std::invalid_argument("ce_loss: size mismatch");
  }
  const std::size_t n = logits.numel();
  const double * x = logits.value().data();
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) {
    mx = std::max(mx, x[i]);
  }
  double total = 0.0;
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(x[i] - mx);
    total += p[i];
  }
  const double logz = std::log(total) + mx;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] /= total;
    loss += target[i] * (logz - x[i]);
  }
  return make_op({1}, {loss}, {logits}, [n, target, p = std::move(p)](Node & nd) {
    const double g = nd.grad[0];
    for (std::size_t i = 0; i < n; ++i) {
      nd.parents[0]->grad[i] += g * (p[i] - target[i]);
    }
  });
}

/// Mean L1 over waypoint rows [T, 3]; the heading column compares via the
/// wrapped angular difference.
inline Tensor trajectory_l1_loss(const Tensor & pred, const std::vector<Pose> & target)
{
  if (pred.shape().size() != 2 || pred.dim(1) != 3 ||
      pred.dim(0) != static_cast<int>(target.size())) {
    throw std::invalid_argument("trajectory_l1_loss: pred must be [T,3] matching target");
  }
  const int T = pred.dim(0);
  std::vector<double> resid(static_cast<std::size_t>(T) * 3);
  double loss = 0.0;
  for (int t = 0; t < T; ++t) {
    resid[t * 3 + 0] = pred.value()[t * 3 + 0] - target[t].x;
    resid[t * 3 + 1] = pred.value()[t * 3 + 1] - target[t].y;
    resid[t * 3 + 2] = angle_diff(pred.value()[t * 3 + 2], target[t].heading);
    for (int j = 0; j < 3; ++j) {
      loss += std::abs(resid[t * 3 + j]);
    }
  }
  loss /= static_cast<double>(T * 3);
  return make_op({1}, {loss}, {pred}, [T, resid = std::move(resid)](Node & n) {
    const double g = n.grad[0] / static_cast<double>(T * 3);
    for (std::size_t i = 0; i < resid.size(); ++i) {
      const double r = resid[i];
      n.parents[0]->grad[i] += g * (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0));
    }
  });
}

}  // namespace bevplan::ad

#endif  // BEVPLAN_LOSSES_HPP_
