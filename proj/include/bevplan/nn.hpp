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

#ifndef BEVPLAN_NN_HPP_
#define BEVPLAN_NN_HPP_

#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bevplan/ops.hpp"
#include "bevplan/random.hpp"
#include "bevplan/tensor.hpp"

namespace bevplan::nn
{

/// A named trainable array plus its optimizer slots.
struct Param
{
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> adam_m;
  std::vector<double> adam_v;

  std::size_t numel() const { return value.size(); }
};

/// Owns all parameters of a model; iteration order is creation order, which
/// keeps optimizer updates and checkpoints deterministic.
class ParamStore
{
public:
  Param & create(const std::string & name, std::vector<int> shape)
  {
    if (index_.count(name)) {
      throw std::invalid_argument("duplicate parameter name: " + name);
    }
    auto p = std::make_unique<Param>();
    p->name = name;
    p->shape = std::move(shape);
    p->value.assign(ad::shape_numel(p->shape), 0.0);
    params_.push_back(std::move(p));
    index_[name] = params_.size() - 1;
    return *params_.back();
  }

  Param & at(const std::string & name)
  {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw std::out_of_range("no parameter named " + name);
    }
    return *params_[it->second];
  }

  bool contains(const std::string & name) const { return index_.count(name) > 0; }

  std::vector<Param *> all()
  {
    std::vector<Param *> out;
    out.reserve(params_.size());
    for (auto & p : params_) {
      out.push_back(p.get());
    }
    return out;
  }

  std::size_t total_numel() const
  {
    std::size_t n = 0;
    for (const auto & p : params_) {
      n += p->numel();
    }
    return n;
  }

private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Binds parameters into one graph as leaf tensors. Binding the same Param
/// twice returns the same node, so shared weights accumulate gradients.
class Graph
{
public:
  explicit Graph(bool train) : train_(train) {}

  ad::Tensor use(Param & p)
  {
    auto it = bound_.find(&p);
    if (it != bound_.end()) {
      return it->second;
    }
    ad::Tensor t = ad::Tensor::leaf(p.shape, p.value, train_);
    bound_.emplace(&p, t);
    order_.push_back(&p);
    return t;
  }

  bool training() const { return train_; }

  /// Parameters touched by this graph, in first-use order.
  const std::vector<Param *> & used() const { return order_; }

  const ad::Tensor & bound(Param & p) const { return bound_.at(&p); }

private:
  bool train_;
  std::unordered_map<Param *, ad::Tensor> bound_;
  std::vector<Param *> order_;
};

namespace init
{

inline void xavier_uniform(Param & p, Rng & rng, int fan_in, int fan_out)
{
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto & v : p.value) {
    v = rng.uniform(-a, a);
  }
}

inline void normal(Param & p, Rng & rng, double stddev)
{
  for (auto & v : p.value) {
    v = rng.normal(0.0, stddev);
  }
}

inline void constant(Param & p, double c)
{
  for (auto & v : p.value) {
    v = c;
  }
}

}  // namespace init

/// Fully-connected layer.
struct Linear
{
  Param * weight{nullptr};  // [in, out]
  Param * bias{nullptr};    // [out]

  static Linear create(ParamStore & store, const std::string & name, int in, int out, Rng & rng,
                       bool zero_init = false)
  {
    Linear l;
    l.weight = &store.create(name + ".weight", {in, out});
    l.bias = &store.create(name + ".bias", {out});
    if (!zero_init) {
      init::xavier_uniform(*l.weight, rng, in, out);
    }
    return l;
  }

  /// x [*, in] -> [*, out]; leading dims flattened through a 2D matmul.
  ad::Tensor forward(Graph & g, const ad::Tensor & x) const
  {
    const int in = weight->shape[0];
    const int out = weight->shape[1];
    std::vector<int> out_shape = x.shape();
    if (out_shape.back() != in) {
      throw std::invalid_argument("linear: input last dim " + std::to_string(out_shape.back()) +
                                  " != " + std::to_string(in));
    }
    out_shape.back() = out;
    const int rows = static_cast<int>(x.numel()) / in;
    ad::Tensor flat = ad::reshape(x, {rows, in});
    ad::Tensor y = ad::add_bias(ad::matmul(flat, g.use(*weight)), g.use(*bias));
    return ad::reshape(y, std::move(out_shape));
  }
};

/// Two-layer MLP with ReLU.
struct Mlp
{
  Linear fc1;
  Linear fc2;

  static Mlp create(ParamStore & store, const std::string & name, int in, int hidden, int out,
                    Rng & rng, bool zero_last = false)
  {
    Mlp m;
    m.fc1 = Linear::create(store, name + ".fc1", in, hidden, rng);
    m.fc2 = Linear::create(store, name + ".fc2", hidden, out, rng, zero_last);
    return m;
  }

  ad::Tensor forward(Graph & g, const ad::Tensor & x) const
  {
    return fc2.forward(g, ad::relu(fc1.forward(g, x)));
  }
};

struct LayerNorm
{
  Param * gamma{nullptr};
  Param * beta{nullptr};

  static LayerNorm create(ParamStore & store, const std::string & name, int dim)
  {
    LayerNorm ln;
    ln.gamma = &store.create(name + ".gamma", {dim});
    ln.beta = &store.create(name + ".beta", {dim});
    init::constant(*ln.gamma, 1.0);
    return ln;
  }

  ad::Tensor forward(Graph & g, const ad::Tensor & x) const
  {
    return ad::layer_norm(x, g.use(*gamma), g.use(*beta));
  }
};

struct Conv2d
{
  Param * weight{nullptr};  // [F, C, kh, kw]
  Param * bias{nullptr};    // [F]
  int stride{1};
  int pad{0};

  static Conv2d create(ParamStore & store, const std::string & name, int in_ch, int out_ch, int k,
                       int stride, int pad, Rng & rng)
  {
    Conv2d c;
    c.weight = &store.create(name + ".weight", {out_ch, in_ch, k, k});
    c.bias = &store.create(name + ".bias", {out_ch});
    c.stride = stride;
    c.pad = pad;
    init::xavier_uniform(*c.weight, rng, in_ch * k * k, out_ch * k * k);
    return c;
  }

  ad::Tensor forward(Graph & g, const ad::Tensor & x) const
  {
    return ad::conv2d(x, g.use(*weight), g.use(*bias), stride, pad);
  }
};

struct ConvTranspose2d
{
  Param * weight{nullptr};  // [C, F, kh, kw]
  Param * bias{nullptr};    // [F]
  int stride{1};
  int pad{0};

  static ConvTranspose2d create(ParamStore & store, const std::string & name, int in_ch,
                                int out_ch, int k, int stride, int pad, Rng & rng)
  {
    ConvTranspose2d c;
    c.weight = &store.create(name + ".weight", {in_ch, out_ch, k, k});
    c.bias = &store.create(name + ".bias", {out_ch});
    c.stride = stride;
    c.pad = pad;
    init::xavier_uniform(*c.weight, rng, in_ch * k * k, out_ch * k * k);
    return c;
  }

  ad::Tensor forward(Graph & g, const ad::Tensor & x) const
  {
    return ad::conv_transpose2d(x, g.use(*weight), g.use(*bias), stride, pad);
  }
};

}  // namespace bevplan::nn

#endif  // BEVPLAN_NN_HPP_
