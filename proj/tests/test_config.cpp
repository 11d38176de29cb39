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

#include "pcseg/config.hpp"

namespace pcseg {
namespace {

TEST(KeyValueConfig, ParsesCommentsAndTypes) {
  const auto kv = KeyValueConfig::parse(
      "# leading comment\n"
      "a.s = hello world  # trailing\n"
      "a.d = 2.5\n"
      "\n"
      "a.i = -7\n"
      "a.b = off\n"
      "a.l = x, y ,z\n");
  EXPECT_EQ(kv.get("a.s", std::string()), "hello world");
  EXPECT_EQ(kv.get("a.d", 0.0), 2.5);
  EXPECT_EQ(kv.get("a.i", 0LL), -7);
  EXPECT_FALSE(kv.get("a.b", true));
  EXPECT_EQ(kv.get_list("a.l"), (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(kv.get("a.missing", 4.0), 4.0);
  EXPECT_NO_THROW(kv.check_all_used());
}

TEST(KeyValueConfig, RejectsMalformedInput) {
  EXPECT_THROW(KeyValueConfig::parse("nokey = 1\n"), Error);
  EXPECT_THROW(KeyValueConfig::parse("a.b 1\n"), Error);
  EXPECT_THROW(KeyValueConfig::parse("a.b = 1\na.b = 2\n"), Error);
  const auto kv = KeyValueConfig::parse("a.i = 1.5\na.b = maybe\na.d = 3x\n");
  EXPECT_THROW(kv.get("a.i", 0LL), Error);
  EXPECT_THROW(kv.get("a.b", false), Error);
  EXPECT_THROW(kv.get("a.d", 0.0), Error);
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/pcseg.cfg"), Error);
}

TEST(KeyValueConfig, UnknownKeysAreReported) {
  const auto kv = KeyValueConfig::parse("stage1.epochs = 3\nstage1.epoch = 4\n");
  const RunConfig rc = parse_run_config(kv);
  EXPECT_EQ(rc.train.stage1.epochs, 3);
  EXPECT_THROW(kv.check_all_used(), Error);
}

TEST(RunConfig, DefaultsAndOverrides) {
  const RunConfig d = parse_run_config(KeyValueConfig::parse(""));
  EXPECT_EQ(d.train.stage1.epochs, 200);
  EXPECT_EQ(d.train.crf.w_spatial, 3.0);
  EXPECT_TRUE(d.stage2);
  const auto kv = KeyValueConfig::parse(
      "data.train = a.txt, b.txt\n"
      "data.format = xyz-label-ascii\n"
      "fcnn.label_count = 3\n"
      "fcnn.widths = 4, 8, 8\n"
      "grid.voxel_size = 0.1\n"
      "augment.subsample = 10:2, 100:4\n"
      "crf.theta_alpha = 0.8\n"
      "crf.backend = bruteforce\n"
      "crf.normalize = false\n"
      "crf.theta_alpha_candidates = 0.2, 0.4\n"
      "stage2.enabled = no\n"
      "train.seed = 11\n");
  const RunConfig rc = parse_run_config(kv);
  EXPECT_NO_THROW(kv.check_all_used());
  EXPECT_EQ(rc.train_files, (std::vector<std::string>{"a.txt", "b.txt"}));
  EXPECT_EQ(rc.format, CloudFormat::kXyzLabel);
  EXPECT_EQ(rc.train.fcnn.residual_blocks, 2u);
  EXPECT_EQ(rc.train.crf.label_count(), 3u);
  EXPECT_EQ(rc.train.grid.voxel_size, 0.1);
  ASSERT_EQ(rc.train.augment.subsample_table.size(), 2u);
  EXPECT_EQ(rc.train.augment.subsample_table[1].threshold, 100u);
  EXPECT_EQ(rc.train.augment.subsample_table[1].factor, 4.0);
  EXPECT_EQ(rc.train.crf.theta_alpha, 0.8);
  EXPECT_FALSE(rc.train.crf.normalize);
  EXPECT_EQ(rc.train.backend, FilterBackend::kBruteForce);
  EXPECT_FALSE(rc.stage2);
  EXPECT_EQ(rc.train.seed, 11u);
}

TEST(RunConfig, RejectsOutOfRangeValues) {
  EXPECT_THROW(parse_run_config(KeyValueConfig::parse("crf.theta_alpha = 5\n")), Error);
  EXPECT_THROW(parse_run_config(KeyValueConfig::parse("crf.theta_alpha_candidates = 0.01\n")), Error);
  EXPECT_THROW(parse_run_config(KeyValueConfig::parse("fcnn.downsample_factor = 3\n")), Error);
  EXPECT_THROW(parse_run_config(KeyValueConfig::parse("data.format = las\n")), Error);
  EXPECT_THROW(parse_run_config(KeyValueConfig::parse("stage1.lr = -1\n")), Error);
}

TEST(SynthSpec, ParsesRoomParameters) {
  const auto kv = KeyValueConfig::parse(
      "synth.size_min = 3, 3, 2\nsynth.size_max = 4, 4, 2.5\nsynth.density = 80\nsynth.seed = 9\n");
  const SynthSceneSpec s = parse_synth_spec(kv);
  EXPECT_EQ(s.size_min[2], 2.0);
  EXPECT_EQ(s.density, 80.0);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_THROW(parse_synth_spec(KeyValueConfig::parse("synth.size_min = 3, 3\n")), Error);
}

}  // namespace
}  // namespace pcseg
