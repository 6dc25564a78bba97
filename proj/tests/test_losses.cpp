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
#include <vector>

#include "bevplan/gradcheck.hpp"
#include "bevplan/losses.hpp"
#include "bevplan/random.hpp"

using namespace bevplan;
using ad::Tensor;

TEST_CASE("focal loss hand-evaluated values")
{
  // single cell, two classes, p_t = 0.5: gamma=2, alpha=1 -> 0.25 * ln 2
  Tensor logits = Tensor::leaf({2, 1, 1}, {0.0, 0.0});
  std::vector<std::uint8_t> target = {0};
  const double val = ad::focal_loss(logits, target, 2.0, 1.0).scalar();
  CHECK(val == Catch::Approx(0.25 * std::log(2.0)).margin(1e-12));

  // p_t = 1 everywhere -> 0 (up to the prob floor)
  Tensor sure = Tensor::leaf({2, 1, 1}, {60.0, -60.0});
  CHECK(ad::focal_loss(sure, target, 2.0, 0.25).scalar() == Catch::Approx(0.0).margin(1e-9));

  // gamma = 0, alpha = 1 equals mean cross entropy
  Rng rng(3);
  std::vector<double> vals(7 * 4);
  for (auto & v : vals) {
    v = rng.uniform(-2.0, 2.0);
  }
  Tensor grid = Tensor::leaf({7, 2, 2}, vals);
  std::vector<std::uint8_t> cls = {0, 3, 6, 2};
  const double foc = ad::focal_loss(grid, cls, 0.0, 1.0).scalar();
  double ce = 0.0;
  for (int cell = 0; cell < 4; ++cell) {
    double mx = -1e30, z = 0.0;
    for (int l = 0; l < 7; ++l) {
      mx = std::max(mx, vals[l * 4 + cell]);
    }
    for (int l = 0; l < 7; ++l) {
      z += std::exp(vals[l * 4 + cell] - mx);
    }
    ce += -(vals[cls[cell] * 4 + cell] - mx - std::log(z));
  }
  ce /= 4.0;
  CHECK(foc == Catch::Approx(ce).margin(1e-12));
}

TEST_CASE("bce loss hand-evaluated values")
{
  Tensor exact = Tensor::leaf({2}, {1.0, 0.0});
  CHECK(ad::bce_loss(exact, {1.0, 0.0}).scalar() < 1e-6);

  Tensor half = Tensor::leaf({1}, {0.5});
  CHECK(ad::bce_loss(half, {1.0}).scalar() == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK(ad::bce_loss(half, {0.0}).scalar() == Catch::Approx(std::log(2.0)).margin(1e-12));

  Tensor nine = Tensor::leaf({1}, {0.9});
  CHECK(ad::bce_loss(nine, {1.0}).scalar() == Catch::Approx(-std::log(0.9)).margin(1e-12));
}

TEST_CASE("ce loss hand-evaluated values")
{
  Tensor uniform = Tensor::leaf({4}, {0.0, 0.0, 0.0, 0.0});
  CHECK(ad::ce_loss(uniform, {0.25, 0.25, 0.25, 0.25}).scalar() ==
        Catch::Approx(std::log(4.0)).margin(1e-12));

  Tensor two = Tensor::leaf({2}, {0.0, 0.0});
  CHECK(ad::ce_loss(two, {0.75, 0.25}).scalar() == Catch::Approx(std::log(2.0)).margin(1e-12));

  // loss decreases as the matching logit grows
  double prev = 1e9;
  for (double l : {0.0, 1.0, 2.0, 4.0}) {
    Tensor t = Tensor::leaf({3}, {l, 0.0, 0.0});
    const double cur = ad::ce_loss(t, {1.0, 0.0, 0.0}).scalar();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("losses are non-negative on random inputs")
{
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> logits(7 * 6);
    for (auto & v : logits) {
      v = rng.uniform(-3.0, 3.0);
    }
    std::vector<std::uint8_t> cls(6);
    for (auto & c : cls) {
      c = static_cast<std::uint8_t>(rng.uniform_index(7));
    }
    CHECK(ad::focal_loss(Tensor::leaf({7, 6}, logits), cls, 2.0, 0.25).scalar() >= 0.0);

    std::vector<double> preds(5), targs(5);
    for (int j = 0; j < 5; ++j) {
      preds[j] = rng.uniform(0.01, 0.99);
      targs[j] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
    CHECK(ad::bce_loss(Tensor::leaf({5}, preds), targs).scalar() >= 0.0);
  }
}

TEST_CASE("loss gradients pass finite differences")
{
  Rng rng(7);
  const double eps = 1e-5;
  const double tol = 1e-4;

  std::vector<double> logits(7 * 4);
  for (auto & v : logits) {
    v = rng.uniform(-2.0, 2.0);
  }
  std::vector<std::uint8_t> cls = {1, 4, 0, 6};
  CHECK(ad::grad_check(
            [&](const Tensor & x) { return ad::focal_loss(x, cls, 2.0, 0.25); }, {7, 4}, logits,
            eps) < tol);
  CHECK(ad::grad_check(
            [&](const Tensor & x) { return ad::focal_loss(x, cls, 0.0, 1.0); }, {7, 4}, logits,
            eps) < tol);

  std::vector<double> preds = {0.3, 0.6, 0.9, 0.2};
  std::vector<double> targs = {0.0, 1.0, 1.0, 0.0};
  CHECK(ad::grad_check([&](const Tensor & x) { return ad::bce_loss(x, targs); }, {4}, preds,
                       eps) < tol);

  std::vector<double> ce_logits = {0.2, -0.7, 1.1, 0.4};
  std::vector<double> dist = {0.1, 0.2, 0.3, 0.4};
  CHECK(ad::grad_check([&](const Tensor & x) { return ad::ce_loss(x, dist); }, {4}, ce_logits,
                       eps) < tol);

  std::vector<Pose> target_traj = {{1.0, 0.5, 0.2}, {2.0, 1.0, 0.4}, {3.0, 1.5, 0.6}};
  std::vector<double> pred_traj = {1.2, 0.4, 0.1, 1.9, 1.2, 0.5, 3.3, 1.4, 0.5};
  CHECK(ad::grad_check(
            [&](const Tensor & x) { return ad::trajectory_l1_loss(x, target_traj); }, {3, 3},
            pred_traj, eps) < tol);
}

TEST_CASE("trajectory l1 wraps heading residuals")
{
  std::vector<Pose> target = {{0.0, 0.0, kPi - 0.05}};
  Tensor pred = Tensor::leaf({1, 3}, {0.0, 0.0, -kPi + 0.05});
  // wrapped angular distance is 0.1, not nearly 2*pi
  CHECK(ad::trajectory_l1_loss(pred, target).scalar() == Catch::Approx(0.1 / 3.0).margin(1e-9));

  Tensor same = Tensor::leaf({1, 3}, {0.0, 0.0, kPi - 0.05});
  CHECK(ad::trajectory_l1_loss(same, target).scalar() == Catch::Approx(0.0).margin(1e-12));
}
