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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "pcseg_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write(dir_ / "synth.cfg",
          "synth.density = 35\nsynth.size_min = 3, 3, 2\nsynth.size_max = 3.5, 3.5, 2.2\n"
          "synth.seed = 3\n");
    write(dir_ / "train.cfg",
          "data.train = " + (dir_ / "rooms/room_000.txt").string() + "\n" +
              "data.val = " + (dir_ / "rooms/room_001.txt").string() + "\n" +
              "fcnn.widths = 4, 4, 4, 4\n"
              "grid.voxel_size = 0.25\n"
              "stage1.epochs = 2\n"
              "stage1.lr = 0.01\n"
              "stage2.epochs = 1\n"
              "crf.theta_alpha_candidates = 0.4, 1.6\n");
  }

  static void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

  static std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static int run(const std::string& args) {
    const std::string cmd = std::string(PCSEG_CLI_PATH) + " " + args + " > " +
                            (dir_ / "last.log").string() + " 2>&1";
    return std::system(cmd.c_str());
  }

  static std::vector<std::string> lines(const fs::path& p) {
    std::istringstream in(read(p));
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  static inline fs::path dir_;
};

TEST_F(Cli, EndToEndSmoke) {
  const std::string d = dir_.string();
  ASSERT_EQ(run("synth --config " + d + "/synth.cfg --rooms 2 --out " + d + "/rooms"), 0)
      << read(dir_ / "last.log");
  ASSERT_TRUE(fs::exists(dir_ / "rooms/room_001.txt"));

  ASSERT_EQ(run("train --config " + d + "/train.cfg --seed 1 --out " + d + "/model"), 0)
      << read(dir_ / "last.log");
  for (const char* f : {"stage1.ckpt", "model.ckpt", "loss_curve.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "model" / f)) << f;
  EXPECT_EQ(lines(dir_ / "model/loss_curve.csv").size(), 4u);

  ASSERT_EQ(run("gridsearch --config " + d + "/train.cfg --checkpoint " + d +
                "/model/model.ckpt --crf-iters 3 --out " + d + "/grid"),
            0)
      << read(dir_ / "last.log");
  EXPECT_EQ(lines(dir_ / "grid/gridsearch.csv").size(), 3u);

  const std::string room = d + "/rooms/room_001.txt";
  ASSERT_EQ(run("infer --checkpoint " + d + "/grid/model.ckpt --input " + room + " --out " + d +
                "/pred_crf"),
            0)
      << read(dir_ / "last.log");
  ASSERT_EQ(run("infer --crf off --checkpoint " + d + "/grid/model.ckpt --input " + room +
                " --out " + d + "/pred_plain"),
            0)
      << read(dir_ / "last.log");
  // Both runs keep every column except the label.
  const auto a = lines(dir_ / "pred_crf/room_001.pred.txt");
  const auto b = lines(dir_ / "pred_plain/room_001.pred.txt");
  const auto gt = lines(room);
  ASSERT_EQ(a.size(), gt.size());
  ASSERT_EQ(b.size(), gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::string prefix = gt[i].substr(0, gt[i].rfind(' '));
    EXPECT_EQ(a[i].substr(0, a[i].rfind(' ')), prefix);
    EXPECT_EQ(b[i].substr(0, b[i].rfind(' ')), prefix);
  }

  ASSERT_EQ(run("eval --pred " + d + "/pred_crf/room_001.pred.txt --gt " + room +
                " --labels 5 --out " + d + "/eval"),
            0)
      << read(dir_ / "last.log");
  EXPECT_NE(read(dir_ / "eval/metrics.csv").find("floor,"), std::string::npos);

  ASSERT_EQ(run("export-ply --input " + d + "/pred_crf/room_001.pred.txt --out " + d + "/ply"), 0);
  EXPECT_EQ(read(dir_ / "ply/room_001.pred.ply").rfind("ply\n", 0), 0u);
}

TEST_F(Cli, EvalOfGroundTruthAgainstItselfIsPerfect) {
  const std::string d = dir_.string();
  ASSERT_EQ(run("synth --config " + d + "/synth.cfg --out " + d + "/self"), 0);
  const std::string room = d + "/self/room_000.txt";
  ASSERT_EQ(run("eval --pred " + room + " --gt " + room + " --out " + d + "/self_eval"), 0);
  EXPECT_NE(read(dir_ / "self_eval/metrics.csv").find("mean,1.000000,1.000000"),
            std::string::npos);
}

TEST_F(Cli, ErrorsExitNonZero) {
  const std::string d = dir_.string();
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("frobnicate"), 0);
  EXPECT_NE(run("train --config " + d + "/missing.cfg"), 0);
  write(dir_ / "typo.cfg", "stage1.epoch = 3\n");
  EXPECT_NE(run("train --config " + d + "/typo.cfg"), 0);
  EXPECT_NE(read(dir_ / "last.log").find("unknown key"), std::string::npos);
  EXPECT_NE(run("eval --pred " + d + "/nope.txt --gt " + d + "/nope.txt"), 0);
  EXPECT_NE(run("infer --checkpoint " + d + "/nope.ckpt --input x.txt --backend fft"), 0);
}

}  // namespace
