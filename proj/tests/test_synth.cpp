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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcseg/synth.hpp"

namespace pcseg {
namespace {

SynthSceneSpec small_spec(std::uint64_t seed) {
  SynthSceneSpec s;
  s.density = 60.0;
  s.seed = seed;
  return s;
}

TEST(Synth, PointCountScalesWithDensity) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SynthSceneSpec s = small_spec(seed);
    const double n1 = static_cast<double>(synthesize_room(s).size());
    s.density *= 2.0;
    const double n2 = static_cast<double>(synthesize_room(s).size());
    // Independent Poisson counts with means m and 2m: var(n2 - 2 n1) = 6m.
    EXPECT_LE(std::abs(n2 - 2.0 * n1), 3.0 * std::sqrt(6.0 * n1)) << "seed " << seed;
  }
}

TEST(Synth, NoiseFreeLabelsMatchGeometry) {
  const LabeledPointCloud c = synthesize_room(small_spec(4));
  const Aabb& b = c.bounds;
  EXPECT_EQ(c.label_count, kSynthClassCount);
  int seen[kSynthClassCount] = {};
  for (const PointObservation& p : c.points) {
    const Vec3& x = p.position;
    ASSERT_TRUE(p.label.has_value());
    ++seen[*p.label];
    switch (*p.label) {
      case kFloor: EXPECT_EQ(x[2], 0.0); break;
      case kCeiling: EXPECT_EQ(x[2], b.max[2]); break;
      case kWall:
        EXPECT_TRUE(x[0] == 0.0 || x[1] == 0.0 || x[0] == b.max[0] || x[1] == b.max[1]);
        break;
      case kBox:
      case kPillar:
        EXPECT_GE(x[0], 0.15 - 1e-12);
        EXPECT_GE(x[1], 0.15 - 1e-12);
        EXPECT_LE(x[0], b.max[0] - 0.15 + 1e-12);
        EXPECT_LE(x[1], b.max[1] - 0.15 + 1e-12);
        if (*p.label == kBox) {
          EXPECT_LE(x[2], 1.0);
        }
        break;
    }
    ASSERT_TRUE(p.color.has_value());
    for (int k = 0; k < 3; ++k) {
      EXPECT_GE((*p.color)[k], 0.0);
      EXPECT_LE((*p.color)[k], 255.0);
    }
  }
  for (int k = 0; k < kSynthClassCount; ++k) EXPECT_GT(seen[k], 0) << synth_class_names()[k];
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Synth, SameSeedWritesIdenticalFiles) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string a = (dir / "pcseg_synth_a.txt").string(), b = (dir / "pcseg_synth_b.txt").string();
  save_cloud(synthesize_room(small_spec(5)), a, CloudFormat::kXyzRgbLabel);
  save_cloud(synthesize_room(small_spec(5)), b, CloudFormat::kXyzRgbLabel);
  EXPECT_EQ(file_bytes(a), file_bytes(b));
  save_cloud(synthesize_room(small_spec(6)), b, CloudFormat::kXyzRgbLabel);
  EXPECT_NE(file_bytes(a), file_bytes(b));
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Synth, LabelNoiseRate) {
  SynthSceneSpec s = small_spec(7);
  s.density = 400.0;
  s.label_noise = 0.2;
  const LabeledPointCloud c = synthesize_room(s);
  // Only floor patches produce z == 0 exactly.
  double n = 0.0, flipped = 0.0;
  for (const PointObservation& p : c.points)
    if (p.position[2] == 0.0) {
      ++n;
      flipped += *p.label != kFloor;
    }
  ASSERT_GT(n, 1000.0);
  EXPECT_LE(std::abs(flipped / n - 0.2), 3.0 * std::sqrt(0.2 * 0.8 / n));
}

TEST(Synth, Validation) {
  SynthSceneSpec s = small_spec(8);
  s.density = 0.0;
  EXPECT_THROW(synthesize_room(s), Error);
  s = small_spec(8);
  s.label_noise = 1.0;
  EXPECT_THROW(synthesize_room(s), Error);
  s = small_spec(8);
  s.size_min = {1.0, 3.0, 2.0};
  EXPECT_THROW(synthesize_room(s), Error);
  s = small_spec(8);
  s.boxes_min = 3;
  s.boxes_max = 1;
  EXPECT_THROW(synthesize_room(s), Error);
}

}  // namespace
}  // namespace pcseg
