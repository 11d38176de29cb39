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
#include <optional>
#include <vector>

#include "pcseg/cloud.hpp"
#include "pcseg/error.hpp"
#include "pcseg/tensor.hpp"

namespace pcseg {

using Index3 = std::array<std::size_t, 3>;

struct IntensityStats {
  double mean = 0.0;
  double range = 1.0;
};

struct GridOptions {
  double voxel_size = 0.05;
  std::size_t pad_multiple = 1;  // network downsampling factor
  std::size_t max_dims = 100;    // per axis, before padding
};

/// Regular metric grid. Channel layout: occupancy, then R,G,B when the cloud
/// has color, then intensity when it has intensity.
struct VoxelGrid {
  Vec3 origin{};
  double voxel_size = 0.05;
  Index3 dims{};
  Tensor channels;  // (C, nx, ny, nz)
  bool has_color = false;
  bool has_intensity = false;

  std::size_t channel_count() const { return channels.empty() ? 0 : channels.dim(0); }
};

inline std::size_t grid_channel_count(bool color, bool intensity) {
  return 1 + (color ? 3 : 0) + (intensity ? 1 : 0);
}

/// Voxel containing p under half-open cells [kV, (k+1)V). A point exactly on
/// the far face of the grid belongs to the last cell.
inline Index3 locate_point(const Vec3& origin, double voxel_size, const Index3& dims,
                           const Vec3& p) {
  Index3 idx{};
  for (int a = 0; a < 3; ++a) {
    const double rel = (p[a] - origin[a]) / voxel_size;
    const double cells = static_cast<double>(dims[a]);
    PCSG_CHECK(rel >= 0.0 && rel <= cells, "locate_point: point outside grid extent");
    const double f = std::floor(rel);
    idx[a] = f >= cells ? dims[a] - 1 : static_cast<std::size_t>(f);
  }
  return idx;
}

inline Index3 locate_point(const VoxelGrid& grid, const Vec3& p) {
  return locate_point(grid.origin, grid.voxel_size, grid.dims, p);
}

/// Occupancy/color/intensity grid over the crop's bounds. Occupied voxels
/// carry the mean color (scaled to [0,1]) and the normalized mean intensity of
/// their points; empty voxels are all zero. Extents are rounded up to whole
/// voxels and then padded to a multiple of options.pad_multiple.
inline VoxelGrid build_grid(const LabeledPointCloud& crop, const GridOptions& options,
                            const std::optional<IntensityStats>& stats = std::nullopt) {
  PCSG_CHECK(!crop.empty(), "build_grid: empty crop");
  PCSG_CHECK(options.voxel_size > 0.0, "build_grid: voxel size must be positive");
  PCSG_CHECK(options.pad_multiple >= 1, "build_grid: pad multiple must be >= 1");
  const bool color = crop.has_color();
  const bool intensity = crop.has_intensity();
  PCSG_CHECK(!intensity || stats.has_value(),
             "build_grid: cloud carries intensity but no intensity statistics given");
  PCSG_CHECK(!stats || stats->range > 0.0, "build_grid: intensity range must be > 0");

  VoxelGrid g;
  g.origin = crop.bounds.min;
  g.voxel_size = options.voxel_size;
  g.has_color = color;
  g.has_intensity = intensity;
  const Vec3 ext = crop.bounds.extent();
  for (int a = 0; a < 3; ++a) {
    auto n = static_cast<std::size_t>(std::ceil(ext[a] / options.voxel_size - 1e-9));
    n = std::max<std::size_t>(n, 1);
    PCSG_CHECK(n <= options.max_dims, "build_grid: axis ", a, " needs ", n,
               " voxels, cap is ", options.max_dims);
    const std::size_t m = options.pad_multiple;
    g.dims[a] = (n + m - 1) / m * m;
  }
  const std::size_t nc = grid_channel_count(color, intensity);
  const std::size_t vol = g.dims[0] * g.dims[1] * g.dims[2];
  g.channels = Tensor({nc, g.dims[0], g.dims[1], g.dims[2]});

  std::vector<std::size_t> counts(vol, 0);
  double* ch = g.channels.data();
  for (const auto& p : crop.points) {
    const Index3 v = locate_point(g, p.position);
    const std::size_t cell = (v[0] * g.dims[1] + v[1]) * g.dims[2] + v[2];
    ++counts[cell];
    std::size_t c = 1;
    if (color) {
      for (int k = 0; k < 3; ++k) ch[(c + k) * vol + cell] += (*p.color)[k];
      c += 3;
    }
    if (intensity) ch[c * vol + cell] += *p.intensity;
  }
  for (std::size_t cell = 0; cell < vol; ++cell) {
    if (counts[cell] == 0) continue;
    const double n = static_cast<double>(counts[cell]);
    ch[cell] = 1.0;
    std::size_t c = 1;
    if (color) {
      for (int k = 0; k < 3; ++k) ch[(c + k) * vol + cell] /= n * 255.0;
      c += 3;
    }
    if (intensity) ch[c * vol + cell] = (ch[c * vol + cell] / n - stats->mean) / stats->range;
  }
  return g;
}

inline VoxelGrid build_grid(const LabeledPointCloud& crop, double voxel_size,
                            const std::optional<IntensityStats>& stats = std::nullopt) {
  GridOptions o;
  o.voxel_size = voxel_size;
  return build_grid(crop, o, stats);
}

}  // namespace pcseg
