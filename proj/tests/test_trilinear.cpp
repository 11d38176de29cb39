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

CoarseGrid grid(Index3 dims, double v = 1.0, Vec3 origin = {0, 0, 0}) {
  return CoarseGrid{origin, v, dims};
}

Vec3 center(const CoarseGrid& g, std::size_t i, std::size_t j, std::size_t k) {
  return {g.origin[0] + (i + 0.5) * g.voxel_size, g.origin[1] + (j + 0.5) * g.voxel_size,
          g.origin[2] + (k + 0.5) * g.voxel_size};
}

std::size_t flat(const CoarseGrid& g, std::size_t i, std::size_t j, std::size_t k) {
  return (i * g.dims[1] + j) * g.dims[2] + k;
}

// Dense (N, M) weight matrix from the sparse weights.
std::vector<std::vector<double>> dense(const InterpWeights& w) {
  std::vector<std::vector<double>> m(w.point_count, std::vector<double>(w.voxel_count, 0.0));
  for (std::size_t i = 0; i < w.point_count; ++i)
    for (std::size_t c = 0; c < 8; ++c) m[i][w.voxel[i * 8 + c]] += w.weight[i * 8 + c];
  return m;
}

std::vector<Vec3> random_points(std::size_t n, const CoarseGrid& g, std::mt19937_64& rng) {
  std::vector<Vec3> pts(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& p : pts)
    for (int a = 0; a < 3; ++a) p[a] = g.origin[a] + u(rng) * g.dims[a] * g.voxel_size;
  return pts;
}

TEST(Weights, PointAtACenterHasWeightOne) {
  const CoarseGrid g = grid({4, 4, 4});
  const std::vector<Vec3> pts = {center(g, 1, 2, 3)};
  const InterpWeights w = compute_weights(pts, g);
  const auto m = dense(w);
  EXPECT_DOUBLE_EQ(m[0][flat(g, 1, 2, 3)], 1.0);
  double others = 0.0;
  for (std::size_t v = 0; v < w.voxel_count; ++v)
    if (v != flat(g, 1, 2, 3)) others += m[0][v];
  EXPECT_EQ(others, 0.0);
}

TEST(Weights, CellCenterGetsOneEighthEach) {
  const CoarseGrid g = grid({4, 4, 4});
  const std::vector<Vec3> pts = {{2.0, 2.0, 2.0}};
  const InterpWeights w = compute_weights(pts, g);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_DOUBLE_EQ(w.weight[c], 0.125);
}

TEST(Weights, QuarterOffsetAlongX) {
  const CoarseGrid g = grid({4, 4, 4});
  Vec3 p = center(g, 1, 1, 1);
  p[0] += 0.25;
  const auto m = dense(compute_weights(std::vector<Vec3>{p}, g));
  EXPECT_DOUBLE_EQ(m[0][flat(g, 1, 1, 1)], 0.75);
  EXPECT_DOUBLE_EQ(m[0][flat(g, 2, 1, 1)], 0.25);
}

TEST(Weights, RowsSumToOneIncludingBorders) {
  std::mt19937_64 rng(1);
  const CoarseGrid g = grid({3, 5, 2}, 0.2, {-1, 0.5, 2});
  const auto pts = random_points(400, g, rng);
  const InterpWeights w = compute_weights(pts, g);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      EXPECT_GE(w.weight[i * 8 + c], 0.0);
      EXPECT_LT(w.voxel[i * 8 + c], w.voxel_count);
      s += w.weight[i * 8 + c];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Weights, OutsidePointRejected) {
  const CoarseGrid g = grid({2, 2, 2});
  EXPECT_THROW(compute_weights(std::vector<Vec3>{{2.5, 1, 1}}, g), Error);
}

TEST(Interpolate, ConstantFieldStaysConstant) {
  std::mt19937_64 rng(2);
  const CoarseGrid g = grid({3, 4, 5}, 0.3);
  const InterpWeights w = compute_weights(random_points(200, g, rng), g);
  const Tensor out = interpolate(w, Tensor({2, 3, 4, 5}, -1.75));
  for (double v : out.values()) EXPECT_NEAR(v, -1.75, 1e-12);
}

TEST(Interpolate, PointAtCenterCopiesTheRow) {
  std::mt19937_64 rng(3);
  const CoarseGrid g = grid({3, 3, 3});
  const Tensor logits = random_tensor({4, 3, 3, 3}, rng);
  const Tensor out = interpolate(compute_weights(std::vector<Vec3>{center(g, 2, 0, 1)}, g), logits);
  for (std::size_t l = 0; l < 4; ++l) EXPECT_DOUBLE_EQ(out[l], logits.at(l, 2, 0, 1));
}

TEST(Interpolate, MatchesDenseMatrixOracle) {
  std::mt19937_64 rng(4);
  const CoarseGrid g = grid({4, 3, 5}, 0.25, {1, -2, 0});
  const auto pts = random_points(150, g, rng);
  const InterpWeights w = compute_weights(pts, g);
  const Tensor logits = random_tensor({3, 4, 3, 5}, rng);
  const Tensor out = interpolate(w, logits);
  const auto m = dense(w);
  const std::size_t vol = w.voxel_count;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t l = 0; l < 3; ++l) {
      double s = 0.0;
      for (std::size_t v = 0; v < vol; ++v) s += m[i][v] * logits[l * vol + v];
      EXPECT_NEAR(out[i * 3 + l], s, 1e-12);
    }
}

TEST(Interpolate, ReproducesLinearFieldsInTheInterior) {
  std::mt19937_64 rng(5);
  const CoarseGrid g = grid({5, 5, 5}, 0.5);
  Tensor field({1, 5, 5, 5});
  auto f = [](const Vec3& p) { return 0.3 + 1.5 * p[0] - 2.0 * p[1] + 0.7 * p[2]; };
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 5; ++k) field.at(0, i, j, k) = f(center(g, i, j, k));
  // Interior: between the first and last centers on every axis.
  std::uniform_real_distribution<double> u(0.25, 2.25);
  std::vector<Vec3> pts(100);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const Tensor out = interpolate(compute_weights(pts, g), field);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(out[i], f(pts[i]), 1e-12);
}

TEST(Splat, UnitGradientAtACenter) {
  const CoarseGrid g = grid({2, 3, 2});
  const InterpWeights w = compute_weights(std::vector<Vec3>{center(g, 1, 2, 0)}, g);
  const Tensor out = splat(w, Tensor({1, 1}, 1.0), {1, 2, 3, 2});
  for (std::size_t v = 0; v < out.size(); ++v)
    EXPECT_EQ(out[v], v == flat(g, 1, 2, 0) ? 1.0 : 0.0);
}

TEST(Splat, IsTheAdjointOfInterpolate) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const CoarseGrid g = grid({3, 4, 2}, 0.1);
    const InterpWeights w = compute_weights(random_points(80, g, rng), g);
    const Tensor x = random_tensor({3, 3, 4, 2}, rng);
    const Tensor y = random_tensor({80, 3}, rng);
    EXPECT_NEAR(dot(interpolate(w, x), y), dot(x, splat(w, y, x.shape())), 1e-10);
  }
}

TEST(Splat, CoincidentPointsDoubleTheGradient) {
  std::mt19937_64 rng(7);
  const CoarseGrid g = grid({3, 3, 3});
  const auto one = random_points(1, g, rng);
  const std::vector<Vec3> two = {one[0], one[0]};
  const Tensor g1 = splat(compute_weights(one, g), Tensor({1, 2}, {0.4, -1.0}), {2, 3, 3, 3});
  const Tensor g2 =
      splat(compute_weights(two, g), Tensor({2, 2}, {0.4, -1.0, 0.4, -1.0}), {2, 3, 3, 3});
  for (std::size_t v = 0; v < g1.size(); ++v) EXPECT_DOUBLE_EQ(g2[v], 2.0 * g1[v]);
}

}  // namespace
}  // namespace pcseg
