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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "pcseg/cloud.hpp"
#include "pcseg/error.hpp"

namespace pcseg {

using Rng = std::mt19937_64;

struct SubsampleRule {
  std::size_t threshold = 0;  // applies to clouds with at least this many points
  double factor = 1.0;
};

struct AugmentConfig {
  double color_range = 2.5;                 // color units, symmetric
  double angle_max = 2.0 * std::numbers::pi;  // angles drawn from [0, angle_max)
  double scale_low = 0.9;
  double scale_high = 1.1;
  std::vector<SubsampleRule> subsample_table = {
      {100000, 10.0}, {1000000, 10.0}, {10000000, 10.0}};
  std::uint64_t seed = 0;

  void validate() const {
    PCSG_CHECK(color_range >= 0.0, "augment: color_range must be >= 0");
    PCSG_CHECK(scale_low > 0.0 && scale_low <= scale_high,
               "augment: need 0 < scale_low <= scale_high");
    PCSG_CHECK(angle_max >= 0.0, "augment: angle range must be non-negative");
    for (const auto& r : subsample_table)
      PCSG_CHECK(r.factor >= 1.0, "augment: sub-sampling factors must be >= 1");
  }
};

/// Perturbs every color channel by an independent draw from
/// U[-color_range, +color_range], then clamps to [0, 255].
inline LabeledPointCloud color_jitter(LabeledPointCloud cloud,
                                      const AugmentConfig& config, Rng& rng) {
  PCSG_CHECK(cloud.has_color(), "color_jitter: cloud has no color");
  if (config.color_range == 0.0) return cloud;
  std::uniform_real_distribution<double> jitter(-config.color_range, config.color_range);
  for (auto& p : cloud.points)
    for (double& c : *p.color) c = std::clamp(c + jitter(rng), 0.0, 255.0);
  return cloud;
}

/// Rotates about the vertical axis through `center`, then scales about it.
/// Pairwise distances scale by exactly `scale`.
inline LabeledPointCloud rotate_scale(LabeledPointCloud cloud, double angle, double scale,
                                      const Vec3& center) {
  PCSG_CHECK(scale > 0.0, "rotate_scale: scale must be positive");
  if (cloud.empty()) return cloud;
  const Vec3& c = center;
  const double cs = std::cos(angle), sn = std::sin(angle);
  for (auto& p : cloud.points) {
    const double dx = p.position[0] - c[0], dy = p.position[1] - c[1];
    const double dz = p.position[2] - c[2];
    p.position = {c[0] + scale * (cs * dx - sn * dy), c[1] + scale * (sn * dx + cs * dy),
                  c[2] + scale * dz};
  }
  refresh_bounds(cloud);
  return cloud;
}

/// Same, about the center of the cloud's bounds.
inline LabeledPointCloud rotate_scale(LabeledPointCloud cloud, double angle, double scale) {
  PCSG_CHECK(scale > 0.0, "rotate_scale: scale must be positive");
  if (cloud.empty()) return cloud;
  const Aabb& b = cloud.bounds;
  const Vec3 c{0.5 * (b.min[0] + b.max[0]), 0.5 * (b.min[1] + b.max[1]),
               0.5 * (b.min[2] + b.max[2])};
  return rotate_scale(std::move(cloud), angle, scale, c);
}

/// Factor of the largest threshold not exceeding `count`; 1 if none applies.
inline double subsample_factor(const std::vector<SubsampleRule>& table,
                               std::size_t count) {
  double factor = 1.0;
  std::size_t best = 0;
  bool found = false;
  for (const auto& r : table)
    if (r.threshold <= count && (!found || r.threshold >= best)) {
      best = r.threshold;
      factor = r.factor;
      found = true;
    }
  return factor;
}

/// Keeps each point independently with probability 1/factor. Never returns an
/// empty cloud.
inline LabeledPointCloud subsample(LabeledPointCloud cloud, const AugmentConfig& config,
                                   Rng& rng) {
  PCSG_CHECK(!cloud.empty(), "subsample: empty cloud");
  const double factor = subsample_factor(config.subsample_table, cloud.size());
  if (factor <= 1.0) return cloud;
  std::bernoulli_distribution keep(1.0 / factor);
  std::vector<PointObservation> kept;
  kept.reserve(static_cast<std::size_t>(cloud.size() / factor * 1.1) + 1);
  for (const auto& p : cloud.points)
    if (keep(rng)) kept.push_back(p);
  if (kept.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
    kept.push_back(cloud.points[pick(rng)]);
  }
  cloud.points = std::move(kept);
  refresh_bounds(cloud);
  return cloud;
}

/// The full training-time augmentation: sub-sampling, color jitter (when the
/// cloud has color), random rotation about Z and uniform scaling.
inline LabeledPointCloud augment(LabeledPointCloud cloud, const AugmentConfig& config,
                                 Rng& rng) {
  config.validate();
  cloud = subsample(std::move(cloud), config, rng);
  if (cloud.has_color()) cloud = color_jitter(std::move(cloud), config, rng);
  std::uniform_real_distribution<double> angle(0.0, config.angle_max);
  std::uniform_real_distribution<double> scale(config.scale_low, config.scale_high);
  const double a = config.angle_max > 0.0 ? angle(rng) : 0.0;
  const double s = config.scale_high > config.scale_low ? scale(rng) : config.scale_low;
  return rotate_scale(std::move(cloud), a, s);
}

}  // namespace pcseg
