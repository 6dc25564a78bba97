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

#ifndef BEVPLAN_CHECKPOINT_HPP_
#define BEVPLAN_CHECKPOINT_HPP_

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bevplan/nn.hpp"
#include "bevplan/optim.hpp"

namespace bevplan
{

inline constexpr std::uint64_t kCheckpointMagic = 0x314e414c50564542ull;  // "BEVPLAN1"
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor
{
  std::string name;
  std::vector<int> dims;
  std::vector<double> values;
};

namespace ckpt_detail
{

template <typename T>
void write_pod(std::ofstream & out, const T & v)
{
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream & in)
{
  T v{};
  in.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!in) {
    throw std::runtime_error("checkpoint: unexpected end of file");
  }
  return v;
}

}  // namespace ckpt_detail

/// Versioned binary container: header {magic, version, config_hash, count},
/// then per tensor {name length, name, rank, dims, little-endian f64 values}.
inline void save_tensors(const std::string & path, std::uint64_t config_hash,
                         const std::vector<NamedTensor> & tensors)
{
  using namespace ckpt_detail;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint: " + path);
  }
  write_pod(out, kCheckpointMagic);
  write_pod(out, kCheckpointVersion);
  write_pod(out, config_hash);
  write_pod(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto & t : tensors) {
    write_pod(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod(out, static_cast<std::uint32_t>(t.dims.size()));
    std::size_t n = 1;
    for (int d : t.dims) {
      write_pod(out, static_cast<std::uint32_t>(d));
      n *= static_cast<std::size_t>(d);
    }
    if (n != t.values.size()) {
      throw std::invalid_argument("checkpoint: dims do not match value count for " + t.name);
    }
    out.write(reinterpret_cast<const char *>(t.values.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!out) {
    throw std::runtime_error("checkpoint write failed: " + path);
  }
}

inline std::vector<NamedTensor> load_tensors(const std::string & path, std::uint64_t * config_hash)
{
  using namespace ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path);
  }
  if (read_pod<std::uint64_t>(in) != kCheckpointMagic) {
    throw std::runtime_error("bad checkpoint magic: " + path);
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto hash = read_pod<std::uint64_t>(in);
  if (config_hash != nullptr) {
    *config_hash = hash;
  }
  const auto count = read_pod<std::uint32_t>(in);
  std::vector<NamedTensor> tensors(count);
  for (auto & t : tensors) {
    const auto name_len = read_pod<std::uint32_t>(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    const auto rank = read_pod<std::uint32_t>(in);
    t.dims.resize(rank);
    std::size_t n = 1;
    for (auto & d : t.dims) {
      d = static_cast<int>(read_pod<std::uint32_t>(in));
      n *= static_cast<std::size_t>(d);
    }
    t.values.resize(n);
    in.read(reinterpret_cast<char *>(t.values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) {
      throw std::runtime_error("checkpoint: truncated tensor " + t.name);
    }
  }
  return tensors;
}

/// Serialize parameters (and Adam slots under "<name>-opt") of a store.
inline void save_checkpoint(const std::string & path, std::uint64_t config_hash,
                            nn::ParamStore & store, const nn::Adam * optimizer = nullptr)
{
  std::vector<NamedTensor> tensors;
  for (nn::Param * p : store.all()) {
    tensors.push_back({p->name, p->shape, p->value});
  }
  if (optimizer != nullptr) {
    for (nn::Param * p : store.all()) {
      std::vector<int> dims = p->shape;
      dims.insert(dims.begin(), 2);
      std::vector<double> mv;
      mv.reserve(2 * p->numel());
      mv.insert(mv.end(), p->adam_m.begin(), p->adam_m.end());
      mv.insert(mv.end(), p->adam_v.begin(), p->adam_v.end());
      tensors.push_back({p->name + "-opt", std::move(dims), std::move(mv)});
    }
    tensors.push_back(
        {"adam.t-opt", {1}, {static_cast<double>(optimizer->step_count())}});
  }
  save_tensors(path, config_hash, tensors);
}

/// Restore parameter values (and Adam slots when present) into a store whose
/// parameters were already created with matching shapes.
inline std::uint64_t load_checkpoint(const std::string & path, nn::ParamStore & store,
                                     long long * adam_step = nullptr)
{
  std::uint64_t hash = 0;
  const auto tensors = load_tensors(path, &hash);
  for (const auto & t : tensors) {
    if (t.name == "adam.t-opt") {
      if (adam_step != nullptr) {
        *adam_step = static_cast<long long>(t.values[0]);
      }
      continue;
    }
    const bool is_opt = t.name.size() > 4 && t.name.substr(t.name.size() - 4) == "-opt";
    const std::string base = is_opt ? t.name.substr(0, t.name.size() - 4) : t.name;
    if (!store.contains(base)) {
      throw std::runtime_error("checkpoint tensor has no matching parameter: " + t.name);
    }
    nn::Param & p = store.at(base);
    if (is_opt) {
      if (t.values.size() != 2 * p.numel()) {
        throw std::runtime_error("checkpoint optimizer state size mismatch: " + t.name);
      }
      p.adam_m.assign(t.values.begin(), t.values.begin() + p.numel());
      p.adam_v.assign(t.values.begin() + p.numel(), t.values.end());
    } else {
      if (t.dims != p.shape) {
        throw std::runtime_error("checkpoint shape mismatch for " + t.name);
      }
      p.value = t.values;
    }
  }
  return hash;
}

}  // namespace bevplan

#endif  // BEVPLAN_CHECKPOINT_HPP_
