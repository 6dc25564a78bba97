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

#ifndef BEVPLAN_OPS_HPP_
#define BEVPLAN_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "bevplan/tensor.hpp"

namespace bevplan::ad
{

namespace kernel
{

// C[n,m] += A[n,k] * B[k,m]. The ikj order keeps the inner loop contiguous.
inline void mm_nn(const double * A, const double * B, double * C, int n, int k, int m)
{
  for (int i = 0; i < n; ++i) {
    const double * arow = A + static_cast<std::size_t>(i) * k;
    double * crow = C + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double a = arow[p];
      if (a == 0.0) {
        continue;
      }
      const double * brow = B + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) {
        crow[j] += a * brow[j];
      }
    }
  }
}

// C[n,m] += A[n,k] * B[m,k]^T
inline void mm_nt(const double * A, const double * B, double * C, int n, int k, int m)
{
  for (int i = 0; i < n; ++i) {
    const double * arow = A + static_cast<std::size_t>(i) * k;
    double * crow = C + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double * brow = B + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += arow[p] * brow[p];
      }
      crow[j] += acc;
    }
  }
}

// C[n,m] += A[k,n]^T * B[k,m]
inline void mm_tn(const double * A, const double * B, double * C, int n, int k, int m)
{
  for (int p = 0; p < k; ++p) {
    const double * arow = A + static_cast<std::size_t>(p) * n;
    const double * brow = B + static_cast<std::size_t>(p) * m;
    for (int i = 0; i < n; ++i) {
      const double a = arow[i];
      if (a == 0.0) {
        continue;
      }
      double * crow = C + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) {
        crow[j] += a * brow[j];
      }
    }
  }
}

}  // namespace kernel

inline void check_same_shape(const Tensor & a, const Tensor & b, const char * op)
{
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

inline Tensor add(const Tensor & a, const Tensor & b)
{
  check_same_shape(a, b, "add");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = a.value()[i] + b.value()[i];
  }
  return make_op(a.shape(), std::move(v), {a, b}, [](Node & n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad[i] += n.grad[i];
      n.parents[1]->grad[i] += n.grad[i];
    }
  });
}

inline Tensor scale(const Tensor & a, double s)
{
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = a.value()[i] * s;
  }
  return make_op(a.shape(), std::move(v), {a}, [s](Node & n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad[i] += n.grad[i] * s;
    }
  });
}

inline Tensor mul(const Tensor & a, const Tensor & b)
{
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = a.value()[i] * b.value()[i];
  }
  return make_op(a.shape(), std::move(v), {a, b}, [](Node & n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad[i] += n.grad[i] * n.parents[1]->value[i];
      n.parents[1]->grad[i] += n.grad[i] * n.parents[0]->value[i];
    }
  });
}

inline Tensor relu(const Tensor & a)
{
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = a.value()[i] > 0.0 ? a.value()[i] : 0.0;
  }
  return make_op(a.shape(), std::move(v), {a}, [](Node & n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (n.parents[0]->value[i] > 0.0) {
        n.parents[0]->grad[i] += n.grad[i];
      }
    }
  });
}

inline Tensor sigmoid(const Tensor & a)
{
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = 1.0 / (1.0 + std::exp(-a.value()[i]));
  }
  return make_op(a.shape(), std::move(v), {a}, [](Node & n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double y = n.value[i];
      n.parents[0]->grad[i] += n.grad[i] * y * (1.0 - y);
    }
  });
}

/// 2D matrix product [n,k] x [k,m] -> [n,m].
inline Tensor matmul(const Tensor & a, const Tensor & b)
{
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_string(a.shape()) + " x " +
                                shape_string(b.shape()));
  }
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<double> v(static_cast<std::size_t>(n) * m, 0.0);
  kernel::mm_nn(a.value().data(), b.value().data(), v.data(), n, k, m);
  return make_op({n, m}, std::move(v), {a, b}, [n, k, m](Node & node) {
    if (node.parents[0]->requires_grad) {
      kernel::mm_nt(node.grad.data(), node.parents[1]->value.data(), node.parents[0]->grad.data(),
                    n, m, k);
    }
    if (node.parents[1]->requires_grad) {
      kernel::mm_tn(node.parents[0]->value.data(), node.grad.data(), node.parents[1]->grad.data(),
                    k, n, m);
    }
  });
}

/// Batched matrix product over leading dim: [B,n,k] x [B,k,m] -> [B,n,m],
/// with optional transposes of the trailing two axes.
inline Tensor bmm(const Tensor & a, const Tensor & b, bool trans_a = false, bool trans_b = false)
{
  if (a.shape().size() != 3 || b.shape().size() != 3 || a.dim(0) != b.dim(0)) {
    throw std::invalid_argument("bmm: need 3D tensors with equal batch");
  }
  const int B = a.dim(0);
  const int n = trans_a ? a.dim(2) : a.dim(1);
  const int k = trans_a ? a.dim(1) : a.dim(2);
  const int kb = trans_b ? b.dim(2) : b.dim(1);
  const int m = trans_b ? b.dim(1) : b.dim(2);
  if (k != kb) {
    throw std::invalid_argument("bmm: inner dimensions differ " + shape_string(a.shape()) + " x " +
                                shape_string(b.shape()));
  }
  const std::size_t sa = static_cast<std::size_t>(a.dim(1)) * a.dim(2);
  const std::size_t sb = static_cast<std::size_t>(b.dim(1)) * b.dim(2);
  const std::size_t sc = static_cast<std::size_t>(n) * m;
  std::vector<double> v(static_cast<std::size_t>(B) * sc, 0.0);
  for (int i = 0; i < B; ++i) {
    const double * pa = a.value().data() + i * sa;
    const double * pb = b.value().data() + i * sb;
    double * pc = v.data() + i * sc;
    if (!trans_a && !trans_b) {
      kernel::mm_nn(pa, pb, pc, n, k, m);
    } else if (!trans_a && trans_b) {
      kernel::mm_nt(pa, pb, pc, n, k, m);
    } else if (trans_a && !trans_b) {
      kernel::mm_tn(pa, pb, pc, n, k, m);
    } else {
      // A^T B^T: fall back to explicit loops (unused on hot paths)
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < m; ++c) {
          double acc = 0.0;
          for (int p = 0; p < k; ++p) {
            acc += pa[static_cast<std::size_t>(p) * n + r] * pb[static_cast<std::size_t>(c) * k + p];
          }
          pc[static_cast<std::size_t>(r) * m + c] += acc;
        }
      }
    }
  }
  return make_op({B, n, m}, std::move(v), {a, b},
                 [B, n, k, m, sa, sb, sc, trans_a, trans_b](Node & node) {
                   Node * na = node.parents[0].get();
                   Node * nb = node.parents[1].get();
                   for (int i = 0; i < B; ++i) {
                     const double * gc = node.grad.data() + i * sc;
                     const double * pa = na->value.data() + i * sa;
                     const double * pb = nb->value.data() + i * sb;
                     double * ga = na->grad.data() + i * sa;
                     double * gb = nb->grad.data() + i * sb;
                     if (na->requires_grad) {
                       if (!trans_a && !trans_b) {
                         kernel::mm_nt(gc, pb, ga, n, m, k);
                       } else if (!trans_a && trans_b) {
                         kernel::mm_nn(gc, pb, ga, n, m, k);
                       } else if (trans_a && !trans_b) {
                         // ga[k,n] += pb[k,m] * gc[n,m]^T
                         kernel::mm_nt(pb, gc, ga, k, m, n);
                       } else {
                         for (int p = 0; p < k; ++p) {
                           for (int r = 0; r < n; ++r) {
                             double acc = 0.0;
                             for (int c = 0; c < m; ++c) {
                               acc += gc[static_cast<std::size_t>(r) * m + c] *
                                      pb[static_cast<std::size_t>(c) * k + p];
                             }
                             ga[static_cast<std::size_t>(p) * n + r] += acc;
                           }
                         }
                       }
                     }
                     if (nb->requires_grad) {
                       if (!trans_a && !trans_b) {
                         kernel::mm_tn(pa, gc, gb, k, n, m);
                       } else if (!trans_a && trans_b) {
                         // gb[m,k] += gc[n,m]^T * pa[n,k]
                         kernel::mm_tn(gc, pa, gb, m, n, k);
                       } else if (trans_a && !trans_b) {
                         kernel::mm_nn(pa, gc, gb, k, n, m);
                       } else {
                         for (int c = 0; c < m; ++c) {
                           for (int p = 0; p < k; ++p) {
                             double acc = 0.0;
                             for (int r = 0; r < n; ++r) {
                               acc += gc[static_cast<std::size_t>(r) * m + c] *
                                      pa[static_cast<std::size_t>(p) * n + r];
                             }
                             gb[static_cast<std::size_t>(c) * k + p] += acc;
                           }
                         }
                       }
                     }
                   }
                 });
}

/// Broadcast-add a vector over the last axis.
inline Tensor add_bias(const Tensor & a, const Tensor & bias)
{
  const int last = a.shape().back();
  if (bias.shape().size() != 1 || bias.dim(0) != last) {
    throw std::invalid_argument("add_bias: bias must match last dim");
  }
  std::vector<double> v(a.numel());
  const std::size_t rows = a.numel() / last;
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < last; ++j) {
      v[r * last + j] = a.value()[r * last + j] + bias.value()[j];
    }
  }
  return make_op(a.shape(), std::move(v), {a, bias}, [last, rows](Node & n) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < last; ++j) {
        n.parents[0]->grad[r * last + j] += n.grad[r * last + j];
        n.parents[1]->grad[j] += n.grad[r * last + j];
      }
    }
  });
}

/// Numerically stable softmax over the last axis.
inline Tensor softmax(const Tensor & a)
{
  const int last = a.shape().back();
  const std::size_t rows = a.numel() / last;
  std::vector<double> v(a.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double * x = a.value().data() + r * last;
    double * y = v.data() + r * last;
    double mx = x[0];
    for (int j = 1; j < last; ++j) {
      mx = std::max(mx, x[j]);
    }
    double total = 0.0;
    for (int j = 0; j < last; ++j) {
      y[j] = std::exp(x[j] - mx);
      total += y[j];
    }
    for (int j = 0; j < last; ++j) {
      y[j] /= total;
    }
  }
  return make_op(a.shape(), std::move(v), {a}, [last, rows](Node & n) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double * y = n.value.data() + r * last;
      const double * gy = n.grad.data() + r * last;
      double * gx = n.parents[0]->grad.data() + r * last;
      double dot = 0.0;
      for (int j = 0; j < last; ++j) {
        dot += gy[j] * y[j];
      }
      for (int j = 0; j < last; ++j) {
        gx[j] += (gy[j] - dot) * y[j];
      }
    }
  });
}

/// Layer normalization over the last axis with learned gain and bias.
inline Tensor layer_norm(const Tensor & a, const Tensor & gamma, const Tensor & beta,
                         double eps = 1e-5)
{
  const int last = a.shape().back();
  if (gamma.dim(0) != last || beta.dim(0) != last) {
    throw std::invalid_argument("layer_norm: gain/bias must match last dim");
  }
  const std::size_t rows = a.numel() / last;
  std::vector<double> v(a.numel());
  std::vector<double> xhat(a.numel());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double * x = a.value().data() + r * last;
    double mean = 0.0;
    for (int j = 0; j < last; ++j) {
      mean += x[j];
    }
    mean /= last;
    double var = 0.0;
    for (int j = 0; j < last; ++j) {
      var += (x[j] - mean) * (x[j] - mean);
    }
    var /= last;
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[r] = istd;
    for (int j = 0; j < last; ++j) {
      xhat[r * last + j] = (x[j] - mean) * istd;
      v[r * last + j] = xhat[r * last + j] * gamma.value()[j] + beta.value()[j];
    }
  }
  return make_op(a.shape(), std::move(v), {a, gamma, beta},
                 [last, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node & n) {
                   Node * nx = n.parents[0].get();
                   Node * ng = n.parents[1].get();
                   Node * nb = n.parents[2].get();
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double * gy = n.grad.data() + r * last;
                     const double * xh = xhat.data() + r * last;
                     double sum_g = 0.0;
                     double sum_gx = 0.0;
                     for (int j = 0; j < last; ++j) {
                       const double gxh = gy[j] * ng->value[j];
                       sum_g += gxh;
                       sum_gx += gxh * xh[j];
                       ng->grad[j] += gy[j] * xh[j];
                       nb->grad[j] += gy[j];
                     }
                     const double istd = inv_std[r];
                     for (int j = 0; j < last; ++j) {
                       const double gxh = gy[j] * ng->value[j];
                       nx->grad[r * last + j] +=
                           istd * (gxh - sum_g / last - xh[j] * sum_gx / last);
                     }
                   }
                 });
}

inline Tensor reshape(const Tensor & a, std::vector<int> shape)
{
  if (shape_numel(shape) != a.numel()) {
    throw std::invalid_argument("reshape: element count mismatch");
  }
  return make_op(std::move(shape), a.value(), {a}, [](Node & n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad[i] += n.grad[i];
    }
  });
}

/// Concatenate along an axis.
inline Tensor concat(const std::vector<Tensor> & xs, int axis)
{
  if (xs.empty()) {
    throw std::invalid_argument("concat: empty input");
  }
  const auto & s0 = xs.front().shape();
  const int rank = static_cast<int>(s0.size());
  if (axis < 0) {
    axis += rank;
  }
  std::vector<int> out_shape = s0;
  int total_axis = 0;
  for (const auto & x : xs) {
    if (static_cast<int>(x.shape().size()) != rank) {
      throw std::invalid_argument("concat: rank mismatch");
    }
    for (int d = 0; d < rank; ++d) {
      if (d != axis && x.shape()[d] != s0[d]) {
        throw std::invalid_argument("concat: non-axis dims must match");
      }
    }
    total_axis += x.shape()[axis];
  }
  out_shape[axis] = total_axis;

  std::size_t outer = 1;
  for (int d = 0; d < axis; ++d) {
    outer *= static_cast<std::size_t>(s0[d]);
  }
  std::size_t inner = 1;
  for (int d = axis + 1; d < rank; ++d) {
    inner *= static_cast<std::size_t>(s0[d]);
  }

  std::vector<double> v(shape_numel(out_shape));
  std::vector<std::size_t> chunk(xs.size());
  const std::size_t out_row = static_cast<std::size_t>(total_axis) * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t off = 0;
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
      chunk[xi] = static_cast<std::size_t>(xs[xi].shape()[axis]) * inner;
      std::memcpy(v.data() + o * out_row + off, xs[xi].value().data() + o * chunk[xi],
                  chunk[xi] * sizeof(double));
      off += chunk[xi];
    }
  }
  return make_op(std::move(out_shape), std::move(v), xs,
                 [outer, inner, out_row, chunk = std::move(chunk)](Node & n) {
                   for (std::size_t o = 0; o < outer; ++o) {
                     std::size_t off = 0;
                     for (std::size_t xi = 0; xi < n.parents.size(); ++xi) {
                       double * dst = n.parents[xi]->grad.data() + o * chunk[xi];
                       const double * src = n.grad.data() + o * out_row + off;
                       for (std::size_t i = 0; i < chunk[xi]; ++i) {
                         dst[i] += src[i];
                       }
                       off += chunk[xi];
                     }
                   }
                 });
}

/// Contiguous slice along an axis.
inline Tensor slice(const Tensor & a, int axis, int start, int len)
{
  const int rank = static_cast<int>(a.shape().size());
  if (axis < 0) {
    axis += rank;
  }
  if (axis < 0 || axis >= rank || start < 0 || len <= 0 || start + len > a.shape()[axis]) {
    throw std::invalid_argument("slice: bounds out of range");
  }
  std::size_t outer = 1;
  for (int d = 0; d < axis; ++d) {
    outer *= static_cast<std::size_t>(a.shape()[d]);
  }
  std::size_t inner = 1;
  for (int d = axis + 1; d < rank; ++d) {
    inner *= static_cast<std::size_t>(a.shape()[d]);
  }
  const std::size_t src_row = static_cast<std::size_t>(a.shape()[axis]) * inner;
  const std::size_t dst_row = static_cast<std::size_t>(len) * inner;
  std::vector<int> out_shape = a.shape();
  out_shape[axis] = len;
  std::vector<double> v(shape_numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    std::memcpy(v.data() + o * dst_row, a.value().data() + o * src_row + start * inner,
                dst_row * sizeof(double));
  }
  return make_op(std::move(out_shape), std::move(v), {a},
                 [outer, inner, src_row, dst_row, start](Node & n) {
                   for (std::size_t o = 0; o < outer; ++o) {
                     double * dst = n.parents[0]->grad.data() + o * src_row + start * inner;
                     const double * src = n.grad.data() + o * dst_row;
                     for (std::size_t i = 0; i < dst_row; ++i) {
                       dst[i] += src[i];
                     }
                   }
                 });
}

/// Global average pool over the trailing two axes: [..., H, W] -> [...].
inline Tensor mean_pool2d(const Tensor & a)
{
  const int rank = static_cast<int>(a.shape().size());
  if (rank < 3) {
    throw std::invalid_argument("mean_pool2d: need at least 3 dims");
  }
  const int H = a.shape()[rank - 2];
  const int W = a.shape()[rank - 1];
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const std::size_t chans = a.numel() / hw;
  std::vector<int> out_shape(a.shape().begin(), a.shape().end() - 2);
  std::vector<double> v(chans, 0.0);
  for (std::size_t c = 0; c < chans; ++c) {
    const double * x = a.value().data() + c * hw;
    double total = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      total += x[i];
    }
    v[c] = total / static_cast<double>(hw);
  }
  return make_op(std::move(out_shape), std::move(v), {a}, [hw, chans](Node & n) {
    for (std::size_t c = 0; c < chans; ++c) {
      const double g = n.grad[c] / static_cast<double>(hw);
      double * dst = n.parents[0]->grad.data() + c * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        dst[i] += g;
      }
    }
  });
}

inline Tensor sum_all(const Tensor & a)
{
  double total = 0.0;
  for (double x : a.value()) {
    total += x;
  }
  return make_op({1}, {total}, {a}, [](Node & n) {
    const double g = n.grad[0];
    for (std::size_t i = 0; i < n.parents[0]->grad.size(); ++i) {
      n.parents[0]->grad[i] += g;
    }
  });
}

inline Tensor mean_all(const Tensor & a)
{
  return scale(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

namespace conv_detail
{

inline int conv_out_dim(int in, int k, int stride, int pad)
{
  return (in + 2 * pad - k) / stride + 1;
}

/// im2col: [C,H,W] -> M[C*kh*kw, OH*OW]
inline void im2col(const double * src, int C, int H, int W, int kh, int kw, int stride, int pad,
                   int OH, int OW, double * M)
{
  for (int c = 0; c < C; ++c) {
    for (int u = 0; u < kh; ++u) {
      for (int v = 0; v < kw; ++v) {
        double * mrow =
            M + (static_cast<std::size_t>(c) * kh * kw + static_cast<std::size_t>(u) * kw + v) *
                    (static_cast<std::size_t>(OH) * OW);
        for (int i = 0; i < OH; ++i) {
          const int y = i * stride + u - pad;
          if (y < 0 || y >= H) {
            for (int j = 0; j < OW; ++j) {
              mrow[static_cast<std::size_t>(i) * OW + j] = 0.0;
            }
            continue;
          }
          const double * srow = src + (static_cast<std::size_t>(c) * H + y) * W;
          for (int j = 0; j < OW; ++j) {
            const int x = j * stride + v - pad;
            mrow[static_cast<std::size_t>(i) * OW + j] = (x >= 0 && x < W) ? srow[x] : 0.0;
          }
        }
      }
    }
  }
}

/// Transpose of im2col: scatter-add M back into the[C,H,W] plane.
inline void col2im(const double * M, int C, int H, int W, int kh, int kw, int stride, int pad,
                   int OH, int OW, double * dst)
{
  for (int c = 0; c < C; ++c) {
    for (int u = 0; u < kh; ++u) {
      for (int v = 0; v < kw; ++v) {
        const double * mrow =
            M + (static_cast<std::size_t>(c) * kh * kw + static_cast<std::size_t>(u) * kw + v) *
                    (static_cast<std::size_t>(OH) * OW);
        for (int i = 0; i < OH; ++i) {
          const int y = i * stride + u - pad;
          if (y < 0 || y >= H) {
            continue;
          }
          double * drow = dst + (static_cast<std::size_t>(c) * H + y) * W;
          for (int j = 0; j < OW; ++j) {
            const int x = j * stride + v - pad;
            if (x >= 0 && x < W) {
              drow[x] += mrow[static_cast<std::size_t>(i) * OW + j];
            }
          }
        }
      }
    }
  }
}

}  // namespace conv_detail

/// conv2d: x [B, C, H, W], w [F, C, kh, kw], bias [F] -> [B, F, OH, OW].
inline Tensor conv2d(const Tensor & x, const Tensor & w, const Tensor & bias, int stride, int pad)
{
  using namespace conv_detail;
  if (x.shape().size() != 4 || w.shape().size() != 4 || x.dim(1) != w.dim(1)) {
    throw std::invalid_argument("conv2d: bad shapes " + shape_string(x.shape()) + " w " +
                                shape_string(w.shape()));
  }
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int F = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (bias.shape().size() != 1 || bias.dim(0) != F) {
    throw std::invalid_argument("conv2d: bias must be [F]");
  }
  const int OH = conv_out_dim(H, kh, stride, pad);
  const int OW = conv_out_dim(W, kw, stride, pad);
  if (OH <= 0 || OW <= 0) {
    throw std::invalid_argument("conv2d: output would be empty");
  }
  const std::size_t ckk = static_cast<std::size_t>(C) * kh * kw;
  const std::size_t ohw = static_cast<std::size_t>(OH) * OW;
  const std::size_t in_plane = static_cast<std::size_t>(C) * H * W;
  const std::size_t out_plane = static_cast<std::size_t>(F) * ohw;

  std::vector<double> v(static_cast<std::size_t>(B) * out_plane, 0.0);
  std::vector<double> cols(ckk * ohw);
  for (int b = 0; b < B; ++b) {
    im2col(x.value().data() + b * in_plane, C, H, W, kh, kw, stride, pad, OH, OW, cols.data());
    double * out = v.data() + b * out_plane;
    kernel::mm_nn(w.value().data(), cols.data(), out, F, static_cast<int>(ckk),
                  static_cast<int>(ohw));
    for (int f = 0; f < F; ++f) {
      const double bv = bias.value()[f];
      for (std::size_t i = 0; i < ohw; ++i) {
        out[f * ohw + i] += bv;
      }
    }
  }
  return make_op(
      {B, F, OH, OW}, std::move(v), {x, w, bias},
      [B, C, H, W, F, kh, kw, stride, pad, OH, OW, ckk, ohw, in_plane, out_plane](Node & n) {
        Node * nx = n.parents[0].get();
        Node * nw = n.parents[1].get();
        Node * nb = n.parents[2].get();
        std::vector<double> cols(ckk * ohw);
        std::vector<double> dcols(ckk * ohw);
        for (int b = 0; b < B; ++b) {
          const double * gout = n.grad.data() + b * out_plane;
          if (nw->requires_grad || nx->requires_grad) {
            im2col(nx->value.data() + b * in_plane, C, H, W, kh, kw, stride, pad, OH, OW,
                   cols.data());
          }
          if (nw->requires_grad) {
            kernel::mm_nt(gout, cols.data(), nw->grad.data(), F, static_cast<int>(ohw),
                          static_cast<int>(ckk));
          }
          if (nx->requires_grad) {
            std::fill(dcols.begin(), dcols.end(), 0.0);
            kernel::mm_tn(nw->value.data(), gout, dcols.data(), static_cast<int>(ckk), F,
                          static_cast<int>(ohw));
            col2im(dcols.data(), C, H, W, kh, kw, stride, pad, OH, OW,
                   nx->grad.data() + b * in_plane);
          }
          if (nb->requires_grad) {
            for (int f = 0; f < F; ++f) {
              double acc = 0.0;
              for (std::size_t i = 0; i < ohw; ++i) {
                acc += gout[f * ohw + i];
              }
              nb->grad[f] += acc;
            }
          }
        }
      });
}

/// conv_transpose2d: x [B, C, H, W], w [C, F, kh, kw], bias [F]
/// -> [B, F, OH, OW] with OH = (H-1)*stride - 2*pad + kh.
inline Tensor conv_transpose2d(const Tensor & x, const Tensor & w, const Tensor & bias, int stride,
                               int pad)
{
  using namespace conv_detail;
  if (x.shape().size() != 4 || w.shape().size() != 4 || x.dim(1) != w.dim(0)) {
    throw std::invalid_argument("conv_transpose2d: bad shapes " + shape_string(x.shape()) + " w " +
                                shape_string(w.shape()));
  }
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int F = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (bias.shape().size() != 1 || bias.dim(0) != F) {
    throw std::invalid_argument("conv_transpose2d: bias must be [F]");
  }
  const int OH = (H - 1) * stride - 2 * pad + kh;
  const int OW = (W - 1) * stride - 2 * pad + kw;
  if (OH <= 0 || OW <= 0) {
    throw std::invalid_argument("conv_transpose2d: output would be empty");
  }
  const std::size_t fkk = static_cast<std::size_t>(F) * kh * kw;
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  const std::size_t in_plane = static_cast<std::size_t>(C) * hw;
  const std::size_t out_plane = static_cast<std::size_t>(F) * OH * OW;

  // Forward is the input-gradient of a conv2d that maps [F,OH,OW]->[C,H,W].
  std::vector<double> v(static_cast<std::size_t>(B) * out_plane, 0.0);
  std::vector<double> cols(fkk * hw);
  for (int b = 0; b < B; ++b) {
    std::fill(cols.begin(), cols.end(), 0.0);
    kernel::mm_tn(w.value().data(), x.value().data() + b * in_plane, cols.data(),
                  static_cast<int>(fkk), C, static_cast<int>(hw));
    col2im(cols.data(), F, OH, OW, kh, kw, stride, pad, H, W, v.data() + b * out_plane);
    double * out = v.data() + b * out_plane;
    for (int f = 0; f < F; ++f) {
      const double bv = bias.value()[f];
      for (std::size_t i = 0; i < static_cast<std::size_t>(OH) * OW; ++i) {
        out[f * static_cast<std::size_t>(OH) * OW + i] += bv;
      }
    }
  }
  return make_op(
      {B, F, OH, OW}, std::move(v), {x, w, bias},
      [B, C, H, W, F, kh, kw, stride, pad, OH, OW, fkk, hw, in_plane, out_plane](Node & n) {
        Node * nx = n.parents[0].get();
        Node * nw = n.parents[1].get();
        Node * nb = n.parents[2].get();
        std::vector<double> gcols(fkk * hw);
        for (int b = 0; b < B; ++b) {
          const double * gout = n.grad.data() + b * out_plane;
          if (nx->requires_grad || nw->requires_grad) {
            im2col(gout, F, OH, OW, kh, kw, stride, pad, H, W, gcols.data());
          }
          if (nx->requires_grad) {
            kernel::mm_nn(nw->value.data(), gcols.data(), nx->grad.data() + b * in_plane, C,
                          static_cast<int>(fkk), static_cast<int>(hw));
          }
          if (nw->requires_grad) {
            kernel::mm_nt(nx->value.data() + b * in_plane, gcols.data(), nw->grad.data(), C,
                          static_cast<int>(hw), static_cast<int>(fkk));
          }
          if (nb->requires_grad) {
            const std::size_t ohw = static_cast<std::size_t>(OH) * OW;
            for (int f = 0; f < F; ++f) {
              double acc = 0.0;
              for (std::size_t i = 0; i < ohw; ++i) {
                acc += gout[f * ohw + i];
              }
              nb->grad[f] += acc;
            }
          }
        }
      });
}

/// Repeat a tensor along a new leading batch axis; gradients sum over copies.
inline Tensor broadcast_batch(const Tensor & a, int batch)
{
  if (batch <= 0) {
    throw std::invalid_argument("broadcast_batch: batch must be positive");
  }
  std::vector<int> out_shape;
  out_shape.reserve(a.shape().size() + 1);
  out_shape.push_back(batch);
  out_shape.insert(out_shape.end(), a.shape().begin(), a.shape().end());
  const std::size_t n = a.numel();
  std::vector<double> v(static_cast<std::size_t>(batch) * n);
  for (int b = 0; b < batch; ++b) {
    std::memcpy(v.data() + static_cast<std::size_t>(b) * n, a.value().data(), n * sizeof(double));
  }
  return make_op(std::move(out_shape), std::move(v), {a}, [batch, n](Node & nd) {
    for (int b = 0; b < batch; ++b) {
      const double * src = nd.grad.data() + static_cast<std::size_t>(b) * n;
      for (std::size_t i = 0; i < n; ++i) {
        nd.parents[0]->grad[i] += src[i];
      }
    }
  });
}

/// Add a matrix to every batch element: x [B, ...] + p [...].
inline Tensor broadcast_add(const Tensor & x, const Tensor & p)
{
  const std::size_t n = p.numel();
  if (x.numel() % n != 0 ||
      !std::equal(p.shape().begin(), p.shape().end(), x.shape().end() - p.shape().size())) {
    throw std::invalid_argument("broadcast_add: trailing dims must match");
  }
  const std::size_t B = x.numel() / n;
  std::vector<double> v(x.numel());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      v[b * n + i] = x.value()[b * n + i] + p.value()[i];
    }
  }
  return make_op(x.shape(), std::move(v), {x, p}, [B, n](Node & nd) {
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t i = 0; i < n; ++i) {
        nd.parents[0]->grad[b * n + i] += nd.grad[b * n + i];
        nd.parents[1]->grad[i] += nd.grad[b * n + i];
      }
    }
  });
}

/// Swap the trailing two axes.
inline Tensor transpose_last2(const Tensor & a)
{
  const int rank = static_cast<int>(a.shape().size());
  if (rank < 2) {
    throw std::invalid_argument("transpose_last2: need at least 2 dims");
  }
  const int n = a.shape()[rank - 2];
  const int m = a.shape()[rank - 1];
  const std::size_t nm = static_cast<std::size_t>(n) * m;
  const std::size_t B = a.numel() / nm;
  std::vector<int> out_shape = a.shape();
  std::swap(out_shape[rank - 2], out_shape[rank - 1]);
  std::vector<double> v(a.numel());
  for (std::size_t b = 0; b < B; ++b) {
    const double * src = a.value().data() + b * nm;
    double * dst = v.data() + b * nm;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        dst[static_cast<std::size_t>(j) * n + i] = src[static_cast<std::size_t>(i) * m + j];
      }
    }
  }
  return make_op(std::move(out_shape), std::move(v), {a}, [B, n, m, nm](Node & nd) {
    for (std::size_t b = 0; b < B; ++b) {
      const double * src = nd.grad.data() + b * nm;
      double * dst = nd.parents[0]->grad.data() + b * nm;
      for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
          dst[static_cast<std::size_t>(i) * m + j] += src[static_cast<std::size_t>(j) * n + i];
        }
      }
    }
  });
}

/// Scaled dot-product attention with h heads over already-projected inputs:
/// q [B, nq, c], k/v [B, nk, c] -> [B, nq, c]. Composed from primitives, so
/// the gradient comes from the tape.
inline Tensor multi_head_attention(const Tensor & q, const Tensor & k, const Tensor & v, int heads)
{
  const int c = q.shape().back();
  if (heads <= 0 || c % heads != 0) {
    throw std::invalid_argument("multi_head_attention: heads must divide channels");
  }
  if (k.shape() != v.shape() || q.dim(0) != k.dim(0) || k.shape().back() != c) {
    throw std::invalid_argument("multi_head_attention: shape mismatch");
  }
  const int dh = c / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const Tensor qh = slice(q, 2, h * dh, dh);
    const Tensor kh = slice(k, 2, h * dh, dh);
    const Tensor vh = slice(v, 2, h * dh, dh);
    const Tensor scores = scale(bmm(qh, kh, false, true), inv_sqrt);
    const Tensor attn = softmax(scores);
    outs.push_back(bmm(attn, vh));
  }
  return heads == 1 ? outs.front() : concat(outs, 2);
}

}  // namespace bevplan::ad

#endif  // BEVPLAN_OPS_HPP_
