/* Copyright 2026 The pcseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

// Voxel network: conv(k3) -> log2(D) stride-2 max pools -> residual blocks
// -> 2 stride-1 max pools -> conv(k1) to per-label logits at 1/D resolution.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pcseg/checkpoint.hpp"
#include "pcseg/error.hpp"
#include "pcseg/tape.hpp"
#include "pcseg/tensor.hpp"
#include "pcseg/voxelizer.hpp"

namespace pcseg {

struct FcnnConfig {
  std::size_t in_channels = 4;
  std::size_t label_count = 5;
  // Stem width followed by one width per residual block.
  std::vector<std::size_t> widths = {16, 32, 32, 32};
  std::size_t downsample_factor = 4;
  std::size_t residual_blocks = 3;
  std::size_t convs_per_block = 2;

  void validate() const {
    PCSG_CHECK(in_channels >= 1 && in_channels <= 5, "fcnn: in_channels must be 1..5");
    PCSG_CHECK(label_count >= 2, "fcnn: need at least 2 labels");
    PCSG_CHECK(widths.size() == residual_blocks + 1, "fcnn: expected ",
               residual_blocks + 1, " widths, got ", widths.size());
    for (std::size_t w : widths) PCSG_CHECK(w > 0, "fcnn: widths must be positive");
    const std::size_t d = downsample_factor;
    PCSG_CHECK(d >= 1 && (d & (d - 1)) == 0, "fcnn: downsample factor must be a power of 2");
    PCSG_CHECK(convs_per_block == 2, "fcnn: residual blocks hold 2 convolutions");
  }

  std::size_t pool_count() const {
    std::size_t n = 0;
    for (std::size_t d = downsample_factor; d > 1; d >>= 1) ++n;
    return n;
  }
};

/// Geometry of the network's output grid.
struct CoarseGrid {
  Vec3 origin{};
  double voxel_size = 0.2;
  Index3 dims{};
};

struct VoxelScores {
  Tensor logits;  // (L, cx, cy, cz)
  CoarseGrid grid;
};

class Fcnn {
 public:
  /// Records one forward pass so it can be differentiated.
  struct Trace {
    Tape tape;
    Var input;
    Var output;
    std::vector<Var> params;
  };

  static Fcnn build(const FcnnConfig& config, std::uint64_t seed) {
    config.validate();
    Fcnn net;
    net.config_ = config;
    std::mt19937_64 rng(seed);
    auto conv = [&](const std::string& name, std::size_t out, std::size_t in,
                    std::size_t k) {
      const double fan_in = static_cast<double>(in * k * k * k);
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
      Tensor w({out, in, k, k, k});
      for (double& v : w.values()) v = normal(rng);
      net.params_.push_back({name + ".w", std::move(w)});
      net.params_.push_back({name + ".b", Tensor({out})});
    };
    conv("stem", config.widths[0], config.in_channels, 3);
    for (std::size_t b = 0; b < config.residual_blocks; ++b) {
      const std::size_t in = config.widths[b], out = config.widths[b + 1];
      const std::string p = "block" + std::to_string(b);
      conv(p + ".conv1", out, in, 3);
      conv(p + ".conv2", out, out, 3);
      if (in != out) conv(p + ".proj", out, in, 1);
    }
    conv("head", config.label_count, config.widths.back(), 1);
    return net;
  }

  const FcnnConfig& config() const { return config_; }
  std::vector<NamedTensor>& parameters() { return params_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  /// input: (C, X, Y, Z) with X, Y, Z divisible by the downsampling factor.
  Trace forward_trace(const Tensor& input, bool input_requires_grad = false) const {
    PCSG_CHECK(input.rank() == 4 && input.dim(0) == config_.in_channels,
               "fcnn: expected input (", config_.in_channels, ",X,Y,Z), got ",
               shape_string(input.shape()));
    const std::size_t d = config_.downsample_factor;
    for (int a = 1; a <= 3; ++a)
      PCSG_CHECK(input.dim(a) % d == 0, "fcnn: spatial extent ", input.dim(a),
                 " not divisible by ", d);
    Trace t;
    t.input = input_requires_grad ? t.tape.parameter(input) : t.tape.constant(input);
    for (const auto& p : params_) t.params.push_back(t.tape.parameter(p.value));

    std::size_t next = 0;
    auto conv = [&](Var x, std::size_t k) {
      const Var w = t.params[next++];
      const Var b = t.params[next++];
      return t.tape.conv3d(x, w, b, 1, (k - 1) / 2);
    };
    Var x = t.tape.relu(conv(t.input, 3));
    for (std::size_t i = 0; i < config_.pool_count(); ++i) x = t.tape.maxpool3d(x, 2);
    for (std::size_t b = 0; b < config_.residual_blocks; ++b) {
      const bool project = config_.widths[b] != config_.widths[b + 1];
      Var h = t.tape.relu(conv(x, 3));
      h = conv(h, 3);
      const Var skip = project ? conv(x, 1) : x;
      x = t.tape.relu(t.tape.add(h, skip));
    }
    x = t.tape.maxpool3d(x, 1);
    x = t.tape.maxpool3d(x, 1);
    t.output = conv(x, 1);
    return t;
  }

  Tensor forward(const Tensor& input) const {
    Trace t = forward_trace(input);
    return t.tape.value(t.output);
  }

  VoxelScores forward(const VoxelGrid& grid) const {
    VoxelScores s;
    s.logits = forward(grid.channels);
    s.grid = coarse_grid(grid);
    return s;
  }

  CoarseGrid coarse_grid(const VoxelGrid& grid) const {
    const std::size_t d = config_.downsample_factor;
    return CoarseGrid{grid.origin, grid.voxel_size * static_cast<double>(d),
                      {grid.dims[0] / d, grid.dims[1] / d, grid.dims[2] / d}};
  }

  /// Parameter gradients, in parameters() order, for upstream dL/dlogits.
  std::vector<Tensor> backward(Trace& trace, const Tensor& grad_logits) const {
    trace.tape.backward(trace.output, grad_logits);
    std::vector<Tensor> grads;
    grads.reserve(trace.params.size());
    for (Var v : trace.params) grads.push_back(trace.tape.grad(v));
    return grads;
  }

  void load(const std::vector<NamedTensor>& tensors) {
    for (auto& p : params_) {
      const Tensor& t = find_tensor(tensors, "fcnn." + p.name);
      PCSG_CHECK(t.shape() == p.value.shape(), "checkpoint: tensor '", p.name,
                 "' has shape ", shape_string(t.shape()), ", expected ",
                 shape_string(p.value.shape()));
      p.value = t;
    }
  }

  void append_to(std::vector<NamedTensor>& out) const {
    for (const auto& p : params_) out.push_back({"fcnn." + p.name, p.value});
  }

 private:
  FcnnConfig config_;
  std::vector<NamedTensor> params_;
};

}  // namespace pcseg
