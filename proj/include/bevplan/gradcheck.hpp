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

#ifndef BEVPLAN_GRADCHECK_HPP_
#define BEVPLAN_GRADCHECK_HPP_

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

#include "bevplan/tensor.hpp"

namespace bevplan::ad
{

/// Central-difference check of reverse-mode gradients. `f` must map a leaf
/// tensor to a scalar. Returns max over checked coordinates of
/// |fd - analytic| / (|analytic| + 1e-8). When max_coords > 0, a
/// deterministic evenly-strided subset of coordinates is probed.
inline double grad_check(const std::function<Tensor(const Tensor &)> & f,
                         const std::vector<int> & shape, const std::vector<double> & x0,
                         double eps, int max_coords = -1)
{
  Tensor x = Tensor::leaf(shape, x0, true);
  Tensor y = f(x);
  backward(y);
  const std::vector<double> analytic = x.grad();

  const std::size_t n = x0.size();
  std::size_t stride = 1;
  if (max_coords > 0 && n > static_cast<std::size_t>(max_coords)) {
    stride = (n + max_coords - 1) / max_coords;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    std::vector<double> xp = x0;
    std::vector<double> xm = x0;
    xp[i] += eps;
    xm[i] -= eps;
    const double fp = f(Tensor::leaf(shape, xp, false)).scalar();
    const double fm = f(Tensor::leaf(shape, xm, false)).scalar();
    const double fd = (fp - fm) / (2.0 * eps);
    const double rel = std::abs(fd - analytic[i]) / (std::abs(analytic[i]) + 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace bevplan::ad

#endif  // BEVPLAN_GRADCHECK_HPP_
