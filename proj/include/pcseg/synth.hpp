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

// Synthetic indoor rooms: floor, walls, ceiling, box objects and pillars,
// sampled as Poisson point processes on their visible faces, with
// class-correlated colors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pcseg/cloud.hpp"
#include "pcseg/error.hpp"

namespace pcseg {

enum SynthClass : int { kFloor = 0, kWall = 1, kCeiling = 2, kBox = 3, kPillar = 4 };
inline constexpr int kSynthClassCount = 5;

inline const std::vector<std::string>& synth_class_names() {
  static const std::vector<std::string> names = {"floor", "wall", "ceiling", "box", "pillar"};
  return names;
}

struct SynthSceneSpec {
  Vec3 size_min{3.5, 3.5, 2.5};  // room extents are drawn per axis from
  Vec3 size_max{4.8, 4.8, 3.0};  // [size_min, size_max] meters
  double density = 500.0;        // points per square meter of surface
  std::array<Vec3, kSynthClassCount> base_color = {
      Vec3{120, 90, 60}, Vec3{190, 190, 170}, Vec3{230, 230, 235}, Vec3{180, 60, 50},
      Vec3{70, 90, 160}};
  double color_sigma = 8.0;
  double label_noise = 0.0;      // probability of relabeling a point at random
  int boxes_min = 2, boxes_max = 4;
  int pillars_min = 1, pillars_max = 2;
  std::uint64_t seed = 0;

  void validate() const {
    for (int a = 0; a < 3; ++a)
      PCSG_CHECK(size_min[a] > 0.0 && size_min[a] <= size_max[a],
                 "synth: degenerate room extents on axis ", a);
    PCSG_CHECK(size_min[0] >= 2.0 && size_min[1] >= 2.0 && size_min[2] >= 1.5,
               "synth: rooms must be at least 2 x 2 x 1.5 m");
    PCSG_CHECK(density > 0.0, "synth: density must be positive");
    PCSG_CHECK(label_noise >= 0.0 && label_noise < 1.0, "synth: label noise must be in [0, 1)");
    PCSG_CHECK(color_sigma >= 0.0, "synth: color sigma must be >= 0");
    PCSG_CHECK(boxes_min >= 0 && boxes_min <= boxes_max && pillars_min >= 0 &&
                   pillars_min <= pillars_max,
               "synth: invalid object counts");
  }
};

namespace detail {

/// Axis-aligned rectangle: origin plus two edge vectors.
struct Patch {
  Vec3 origin;
  Vec3 u;
  Vec3 v;
  int label;
};

struct Footprint {
  double x0, y0, x1, y1;
  bool full_height = false;
  bool contains(double x, double y) const { return x > x0 && x < x1 && y > y0 && y < y1; }
};

inline double patch_area(const Patch& p) {
  const Vec3 c{p.u[1] * p.v[2] - p.u[2] * p.v[1], p.u[2] * p.v[0] - p.u[0] * p.v[2],
               p.u[0] * p.v[1] - p.u[1] * p.v[0]};
  return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
}

/// Four vertical faces of the box [x0,x1] x [y0,y1] x [z0,z1].
inline void add_sides(std::vector<Patch>& out, double x0, double y0, double x1, double y1,
                      double z0, double z1, int label) {
  const double h = z1 - z0;
  out.push_back({{x0, y0, z0}, {x1 - x0, 0, 0}, {0, 0, h}, label});
  out.push_back({{x0, y1, z0}, {x1 - x0, 0, 0}, {0, 0, h}, label});
  out.push_back({{x0, y0, z0}, {0, y1 - y0, 0}, {0, 0, h}, label});
  out.push_back({{x1, y0, z0}, {0, y1 - y0, 0}, {0, 0, h}, label});
}

}  // namespace detail

/// Deterministic given spec.seed. Geometry and point sampling draw from
/// separate streams, so changing the density keeps the room layout.
inline LabeledPointCloud synthesize_room(const SynthSceneSpec& spec) {
  spec.validate();
  std::mt19937_64 geo(spec.seed * 2 + 1);
  std::mt19937_64 pts(spec.seed * 2 + 2);
  auto uniform = [](std::mt19937_64& r, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(r);
  };
  auto count = [](std::mt19937_64& r, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(r);
  };
  const double w = uniform(geo, spec.size_min[0], spec.size_max[0]);
  const double d = uniform(geo, spec.size_min[1], spec.size_max[1]);
  const double h = uniform(geo, spec.size_min[2], spec.size_max[2]);

  std::vector<detail::Patch> patches;
  std::vector<detail::Footprint> footprints;
  patches.push_back({{0, 0, 0}, {w, 0, 0}, {0, d, 0}, kFloor});
  patches.push_back({{0, 0, h}, {w, 0, 0}, {0, d, 0}, kCeiling});
  detail::add_sides(patches, 0, 0, w, d, 0, h, kWall);

  // Objects are placed by rejection so footprints keep 0.2 m apart and stay
  // 0.15 m off the walls.
  auto place = [&](double sx, double sy) -> std::optional<detail::Footprint> {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double x0 = uniform(geo, 0.15, w - 0.15 - sx);
      const double y0 = uniform(geo, 0.15, d - 0.15 - sy);
      const detail::Footprint f{x0, y0, x0 + sx, y0 + sy, false};
      bool clear = true;
      for (const auto& o : footprints)
        clear = clear && (f.x1 + 0.2 < o.x0 || o.x1 + 0.2 < f.x0 || f.y1 + 0.2 < o.y0 ||
                          o.y1 + 0.2 < f.y0);
      if (clear) return f;
    }
    return std::nullopt;
  };
  const int pillars = count(geo, spec.pillars_min, spec.pillars_max);
  for (int i = 0; i < pillars; ++i) {
    const double s = uniform(geo, 0.3, 0.5);
    if (auto f = place(s, s)) {
      footprints.push_back(*f);
      footprints.back().full_height = true;
      detail::add_sides(patches, f->x0, f->y0, f->x1, f->y1, 0, h, kPillar);
    }
  }
  const int boxes = count(geo, spec.boxes_min, spec.boxes_max);
  for (int i = 0; i < boxes; ++i) {
    const double sx = uniform(geo, 0.4, 1.0), sy = uniform(geo, 0.4, 1.0);
    const double sz = uniform(geo, 0.4, 1.0);
    if (auto f = place(sx, sy)) {
      footprints.push_back(*f);
      detail::add_sides(patches, f->x0, f->y0, f->x1, f->y1, 0, sz, kBox);
      patches.push_back({{f->x0, f->y0, sz}, {sx, 0, 0}, {0, sy, 0}, kBox});
    }
  }

  LabeledPointCloud cloud;
  cloud.label_count = kSynthClassCount;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(1, kSynthClassCount - 1);
  for (const detail::Patch& p : patches) {
    const double mean = spec.density * detail::patch_area(p);
    const long n = std::poisson_distribution<long>(mean)(pts);
    for (long k = 0; k < n; ++k) {
      const double a = unit(pts), b = unit(pts);
      Vec3 pos{};
      for (int c = 0; c < 3; ++c) pos[c] = p.origin[c] + a * p.u[c] + b * p.v[c];
      Vec3 color{};
      for (int c = 0; c < 3; ++c)
        color[c] = std::clamp(spec.base_color[static_cast<std::size_t>(p.label)][c] +
                                  spec.color_sigma * noise(pts),
                              0.0, 255.0);
      int label = p.label;
      if (spec.label_noise > 0.0 && unit(pts) < spec.label_noise)
        label = (label + other(pts)) % kSynthClassCount;
      // Floor under an object and ceiling above a pillar are hidden.
      const bool hidden =
          (p.label == kFloor || p.label == kCeiling) &&
          std::any_of(footprints.begin(), footprints.end(), [&](const detail::Footprint& f) {
            return (p.label == kFloor || f.full_height) && f.contains(pos[0], pos[1]);
          });
      if (hidden) continue;
      cloud.points.push_back({pos, color, std::nullopt, label});
    }
  }
  PCSG_CHECK(!cloud.points.empty(), "synth: room produced no points");
  refresh_bounds(cloud);
  return cloud;
}

}  // namespace pcseg
