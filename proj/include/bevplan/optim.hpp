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

#ifndef BEVPLAN_OPTIM_HPP_
#define BEVPLAN_OPTIM_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bevplan/nn.hpp"

namespace bevplan::nn
{

/// Adam with bias correction over a ParamStore.
class Adam
{
public:
  Adam(std::vector<Param *> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps)
  {
    for (Param * p : params_) {
      if (p->adam_m.size() != p->numel()) {
        p->adam_m.assign(p->numel(), 0.0);
        p->adam_v.assign(p->numel(), 0.0);
      }
    }
  }

  /// One update from per-parameter gradient vectors (aligned with params()).
  void step(const std::vector<std::vector<double>> & grads)
  {
    if (grads.size() != params_.size()) {
      throw std::invalid_argument("adam: gradient list does not match parameter list");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param & p = *params_[i];
      const std::vector<double> & g = grads[i];
      if (g.size() != p.numel()) {
        throw std::invalid_argument("adam: gradient size mismatch for " + p.name);
      }
      for (std::size_t j = 0; j < g.size(); ++j) {
        p.adam_m[j] = beta1_ * p.adam_m[j] + (1.0 - beta1_) * g[j];
        p.adam_v[j] = beta2_ * p.adam_v[j] + (1.0 - beta2_) * g[j] * g[j];
        const double mhat = p.adam_m[j] / bc1;
        const double vhat = p.adam_v[j] / bc2;
        p.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  const std::vector<Param *> & params() const { return params_; }
  long long step_count() const { return t_; }
  void set_step_count(long long t) { t_ = t; }

private:
  std::vector<Param *> params_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long long t_{0};
};

}  // namespace bevplan::nn

#endif  // BEVPLAN_OPTIM_HPP_
