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
#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace pcseg {
namespace {

using testing::random_tensor;

FcnnConfig tiny_config() {
  FcnnConfig c;
  c.in_channels = 4;
  c.label_count = 3;
  c.widths = {3, 4, 4, 4};
  return c;
}

TEST(Fcnn, DownsamplesByFour) {
  FcnnConfig c = tiny_config();
  c.widths = {2, 2, 2, 2};
  const Fcnn net = Fcnn::build(c, 1);
  EXPECT_EQ(net.forward(Tensor({4, 20, 20, 20})).shape(), (Shape{3, 5, 5, 5}));
  EXPECT_EQ(net.forward(Tensor({4, 8, 12, 16})).shape(), (Shape{3, 2, 3, 4}));
}

TEST(Fcnn, MaximumInputVolume) {
  FcnnConfig c = tiny_config();
  c.in_channels = 1;
  c.widths = {1, 1, 1, 1};
  const Fcnn net = Fcnn::build(c, 1);
  EXPECT_EQ(net.forward(Tensor({1, 100, 100, 100})).shape(), (Shape{3, 25, 25, 25}));
}

TEST(Fcnn, SameSeedSameParameters) {
  const Fcnn a = Fcnn::build(tiny_config(), 9), b = Fcnn::build(tiny_config(), 9);
  const Fcnn other = Fcnn::build(tiny_config(), 10);
  ASSERT_EQ(a.parameters().size(), b.parameters().size());
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i].name, b.parameters()[i].name);
    EXPECT_EQ(a.parameters()[i].value.values(), b.parameters()[i].value.values());
  }
  EXPECT_NE(a.parameters()[0].value.values(), other.parameters()[0].value.values());
}

TEST(Fcnn, LayerStructure) {
  const Fcnn net = Fcnn::build(tiny_config(), 1);
  std::vector<std::string> names;
  for (const auto& p : net.parameters()) names.push_back(p.name);
  const std::vector<std::string> expected = {
      "stem.w",         "stem.b",         "block0.conv1.w", "block0.conv1.b", "block0.conv2.w",
      "block0.conv2.b", "block0.proj.w",  "block0.proj.b",  "block1.conv1.w", "block1.conv1.b",
      "block1.conv2.w", "block1.conv2.b", "block2.conv1.w", "block2.conv1.b", "block2.conv2.w",
      "block2.conv2.b", "head.w",         "head.b"};
  EXPECT_EQ(names, expected);
  EXPECT_EQ(net.parameters().back().value.shape(), (Shape{3}));
}

TEST(Fcnn, ZeroInputZeroBiasGivesConstantLogits) {
  const Fcnn net = Fcnn::build(tiny_config(), 2);
  const Tensor out = net.forward(Tensor({4, 8, 8, 8}));
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t s = 0; s < 8; ++s) EXPECT_EQ(out[l * 8 + s], out[l * 8]);
}

TEST(Fcnn, WholeNetworkGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  Fcnn net = Fcnn::build(tiny_config(), 3);
  for (auto& p : net.parameters())
    if (p.name.back() == 'b') p.value = random_tensor(p.value.shape(), rng, -0.2, 0.2);
  const Tensor input = random_tensor({4, 8, 8, 8}, rng, 0.0, 1.0);
  const Tensor probe = random_tensor({3, 2, 2, 2}, rng);
  Fcnn::Trace trace = net.forward_trace(input);
  const std::vector<Tensor> grads = net.backward(trace, probe);
  auto f = [&] { return dot(net.forward(input), probe); };
  double worst = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i)
    worst = std::max(worst, testing::max_gradient_error(f, net.parameters()[i].value, grads[i],
                                                        1e-5, 1e-6));
  EXPECT_LT(worst, 1e-4);
}

TEST(Fcnn, InputGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Fcnn net = Fcnn::build(tiny_config(), 4);
  Tensor input = random_tensor({4, 8, 8, 4}, rng, 0.0, 1.0);
  const Tensor probe = random_tensor({3, 2, 2, 1}, rng);
  Fcnn::Trace trace = net.forward_trace(input, true);
  trace.tape.backward(trace.output, probe);
  const Tensor g = trace.tape.grad(trace.input);
  auto f = [&] { return dot(net.forward(input), probe); };
  EXPECT_LT(testing::max_gradient_error(f, input, g, 1e-5, 1e-6), 1e-4);
}

TEST(Fcnn, ShiftByFourVoxelsShiftsOutputByOneCoarseVoxel) {
  std::mt19937_64 rng(5);
  const Fcnn net = Fcnn::build(tiny_config(), 5);
  const std::size_t n = 96;
  Tensor a({4, n, n, n}), b({4, n, n, n});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // A random blob in the middle, zero elsewhere. With zero biases nothing
  // nonzero reaches the border, so padding never differs between a and b.
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t x = 40; x < 48; ++x)
      for (std::size_t y = 40; y < 48; ++y)
        for (std::size_t z = 40; z < 48; ++z) {
          const double v = u(rng);
          a.at(c, x, y, z) = v;
          b.at(c, x + 4, y, z) = v;
        }
  const Tensor oa = net.forward(a), ob = net.forward(b);
  const std::size_t m = n / 4;
  double worst = 0.0, signal = 0.0;
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t x = 0; x + 1 < m; ++x)
      for (std::size_t y = 0; y < m; ++y)
        for (std::size_t z = 0; z < m; ++z) {
          worst = std::max(worst, std::abs(ob.at(l, x + 1, y, z) - oa.at(l, x, y, z)));
          signal = std::max(signal, std::abs(oa.at(l, x, y, z)));
        }
  EXPECT_GT(signal, 0.0);
  EXPECT_LT(worst, 1e-12);
}

TEST(Fcnn, RejectsIndivisibleInputAndBadConfig) {
  const Fcnn net = Fcnn::build(tiny_config(), 6);
  EXPECT_THROW(net.forward(Tensor({4, 8, 8, 6})), Error);
  EXPECT_THROW(net.forward(Tensor({3, 8, 8, 8})), Error);
  FcnnConfig c = tiny_config();
  c.downsample_factor = 3;
  EXPECT_THROW(Fcnn::build(c, 0), Error);
  c = tiny_config();
  c.widths = {4, 4};
  EXPECT_THROW(Fcnn::build(c, 0), Error);
}

TEST(Fcnn, CoarseGridGeometry) {
  const Fcnn net = Fcnn::build(tiny_config(), 7);
  VoxelGrid g;
  g.origin = {1, 2, 3};
  g.voxel_size = 0.05;
  g.dims = {20, 8, 12};
  const CoarseGrid cg = net.coarse_grid(g);
  EXPECT_EQ(cg.origin, g.origin);
  EXPECT_DOUBLE_EQ(cg.voxel_size, 0.2);
  EXPECT_EQ(cg.dims, (Index3{5, 2, 3}));
}

}  // namespace
}  // namespace pcseg
