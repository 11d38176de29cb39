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

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pcseg/cloud.hpp"
#include "pcseg/error.hpp"
#include "pcseg/fcnn.hpp"
#include "pcseg/tensor.hpp"

namespace pcseg {

/// For every point, the 8 coarse voxels of the 2x2x2 cell of voxel centers
/// bracketing it, with weights prod_s (1 - |p^s - c^s| / V).
struct InterpWeights {
  static constexpr std::size_t kCorners = 8;
  std::size_t point_count = 0;
  std::size_t voxel_count = 0;
  std::vector<std::size_t> voxel;  // point_count * 8 flat voxel indices
  std::vector<double> weight;      // point_count * 8
};

/// Neighbors that fall outside the grid are dropped and the per-axis weights
/// renormalized, so every row still sums to one.
inline InterpWeights compute_weights(std::span<const Vec3> points, const CoarseGrid& grid) {
  PCSG_CHECK(grid.voxel_size > 0.0, "compute_weights: voxel size must be positive");
  const std::array<std::size_t, 3>& n = grid.dims;
  PCSG_CHECK(n[0] > 0 && n[1] > 0 && n[2] > 0, "compute_weights: empty grid");
  InterpWeights w;
  w.point_count = points.size();
  w.voxel_count = n[0] * n[1] * n[2];
  w.voxel.resize(points.size() * 8);
  w.weight.resize(points.size() * 8);
  const double eps = 1e-9;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::array<std::array<std::size_t, 2>, 3> idx{};
    std::array<std::array<double, 2>, 3> wt{};
    for (int a = 0; a < 3; ++a) {
      const double rel = (points[i][a] - grid.origin[a]) / grid.voxel_size;
      PCSG_CHECK(rel >= -eps && rel <= static_cast<double>(n[a]) + eps,
                 "compute_weights: point ", i, " lies outside the grid");
      const double u = rel - 0.5;  // in units of voxels, relative to center 0
      const double f = std::floor(u);
      const double t = u - f;
      const long lo = static_cast<long>(f);
      const long hi = lo + 1;
      double wlo = 1.0 - t, whi = t;
      const bool lo_ok = lo >= 0 && lo < static_cast<long>(n[a]);
      const bool hi_ok = hi >= 0 && hi < static_cast<long>(n[a]);
      if (!lo_ok) wlo = 0.0;
      if (!hi_ok) whi = 0.0;
      const double s = wlo + whi;
      if (s > 0.0) {
        wlo /= s;
        whi /= s;
      } else {
        // Single-voxel axis with the point exactly on a dropped center.
        wlo = lo_ok ? 1.0 : 0.0;
        whi = lo_ok ? 0.0 : 1.0;
      }
      idx[a] = {lo_ok ? static_cast<std::size_t>(lo) : static_cast<std::size_t>(hi),
                hi_ok ? static_cast<std::size_t>(hi) : static_cast<std::size_t>(lo)};
      wt[a] = {wlo, whi};
    }
    for (std::size_t c = 0; c < 8; ++c) {
      const std::size_t bx = (c >> 2) & 1, by = (c >> 1) & 1, bz = c & 1;
      w.voxel[i * 8 + c] = (idx[0][bx] * n[1] + idx[1][by]) * n[2] + idx[2][bz];
      w.weight[i * 8 + c] = wt[0][bx] * wt[1][by] * wt[2][bz];
    }
  }
  return w;
}

inline InterpWeights compute_weights(const LabeledPointCloud& cloud, const CoarseGrid& grid) {
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.points) pts.push_back(p.position);
  return compute_weights(pts, grid);
}

/// Point logits (N, L) as the weighted sum of the bracketing voxels' logits.
inline Tensor interpolate(const InterpWeights& w, const Tensor& voxel_logits) {
  PCSG_CHECK(voxel_logits.rank() == 4, "interpolate: voxel logits must be (L,X,Y,Z)");
  const std::size_t labels = voxel_logits.dim(0);
  const std::size_t vol = voxel_logits.size() / labels;
  PCSG_CHECK(vol == w.voxel_count, "interpolate: weights built for a different grid");
  Tensor out({w.point_count, labels});
  const double* v = voxel_logits.data();
  for (std::size_t i = 0; i < w.point_count; ++i) {
    double* row = out.data() + i * labels;
    for (std::size_t c = 0; c < 8; ++c) {
      const double wt = w.weight[i * 8 + c];
      if (wt == 0.0) continue;
      const std::size_t cell = w.voxel[i * 8 + c];
      for (std::size_t l = 0; l < labels; ++l) row[l] += wt * v[l * vol + cell];
    }
  }
  return out;
}

/// Adjoint of interpolate: distributes (N, L) point gradients onto the
/// (L, X, Y, Z) voxel grid with the same weights. Accumulates points in index
/// order, so the result is reproducible.
inline Tensor splat(const InterpWeights& w, const Tensor& point_grads,
                    const Shape& voxel_shape) {
  PCSG_CHECK(point_grads.rank() == 2 && point_grads.dim(0) == w.point_count,
             "splat: expected (", w.point_count, ", L) point gradients");
  const std::size_t labels = point_grads.dim(1);
  PCSG_CHECK(voxel_shape.size() == 4 && voxel_shape[0] == labels &&
                 shape_size(voxel_shape) / labels == w.voxel_count,
             "splat: voxel shape does not match the weights");
  Tensor out(voxel_shape);
  const std::size_t vol = w.voxel_count;
  double* v = out.data();
  for (std::size_t i = 0; i < w.point_count; ++i) {
    const double* row = point_grads.data() + i * labels;
    for (std::size_t c = 0; c < 8; ++c) {
      const double wt = w.weight[i * 8 + c];
      if (wt == 0.0) continue;
      const std::size_t cell = w.voxel[i * 8 + c];
      for (std::size_t l = 0; l < labels; ++l) v[l * vol + cell] += wt * row[l];
    }
  }
  return out;
}

}  // namespace pcseg
