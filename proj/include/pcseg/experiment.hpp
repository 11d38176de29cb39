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

// Synthetic-room comparison of three systems built from one stage-1 network:
// the network alone, the network plus a hand-set CRF, and the network and
// CRF trained jointly in stage 2.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcseg/synth.hpp"
#include "pcseg/train.hpp"

namespace pcseg {

struct DeskExperimentConfig {
  int train_rooms = 20;
  int val_rooms = 3;
  int test_rooms = 5;
  SynthSceneSpec scene;
  std::uint64_t data_seed = 7;
  TrainConfig train = defaults();

  static TrainConfig defaults() {
    TrainConfig t;
    t.grid.voxel_size = 0.1;
    t.fcnn.widths = {8, 16, 16, 16};
    t.stage1.epochs = 50;
    t.theta_alpha_candidates = {0.2, 0.4, 0.8, 1.6, 3.2};
    return t;
  }
};

struct DeskRun {
  std::uint64_t seed = 0;
  double stage1_miou = 0.0;  // network alone, test rooms
  double manual_miou = 0.0;  // stage-1 network + w_s = 3, w_b = 5, Potts
  double e2e_miou = 0.0;     // after stage 2
  double theta_alpha = 0.0;  // grid-search choice shared by both CRF systems
  CrfParams learned_crf;
  LossCurve curve;
};

struct DeskData {
  std::vector<LabeledPointCloud> train_crops;
  std::vector<PreparedCloud> val;
  std::vector<PreparedCloud> test;
  std::size_t train_points = 0;
};

namespace detail {

inline std::vector<LabeledPointCloud> synth_rooms(const SynthSceneSpec& base, std::uint64_t seed,
                                                  int count) {
  std::vector<LabeledPointCloud> rooms;
  for (int k = 0; k < count; ++k) {
    SynthSceneSpec s = base;
    s.seed = seed + static_cast<std::uint64_t>(k);
    rooms.push_back(synthesize_room(s));
  }
  return rooms;
}

}  // namespace detail

/// Rooms are seeded from data_seed alone, so every training seed sees the
/// same data. The prepared clouds depend on the model's grid settings only.
inline DeskData make_desk_data(const DeskExperimentConfig& c, const Model& model) {
  DeskData d;
  const std::uint64_t base = c.data_seed * 100000;
  const auto train = detail::synth_rooms(c.scene, base, c.train_rooms);
  for (const auto& r : train) d.train_points += r.size();
  d.train_crops = training_crops(train, c.train);
  for (const auto& r : detail::synth_rooms(c.scene, base + 20000, c.val_rooms))
    d.val.push_back(prepare_cloud(r, model, c.train.crop_size, c.train.keep_full_z));
  for (const auto& r : detail::synth_rooms(c.scene, base + 40000, c.test_rooms))
    d.test.push_back(prepare_cloud(r, model, c.train.crop_size, c.train.keep_full_z));
  return d;
}

using ProgressCallback = std::function<void(const std::string&)>;

/// Stage 1, grid search of theta_alpha on validation rooms with the manual
/// CRF, then stage 2 starting from that CRF. All scores are test-room mIOU.
inline DeskRun run_desk_seed(const DeskExperimentConfig& c, DeskData& data, std::uint64_t seed,
                             const ProgressCallback& progress = {}) {
  TrainConfig tc = c.train;
  tc.seed = seed;
  tc.crf = CrfParams::potts(tc.fcnn.label_count);
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  Model model = make_model(tc);
  DeskRun run;
  run.seed = seed;
  const EpochCallback log = [&](const CurveRow& r) {
    say("stage " + std::to_string(r.stage) + " epoch " + std::to_string(r.epoch) + " " + r.split +
        " loss " + std::to_string(r.loss));
  };
  run.curve = train_stage1(model, data.train_crops, nullptr, tc, log);
  run.stage1_miou = evaluate(model, data.test, {false, 0, tc.backend}).miou();
  say("stage 1 test mIOU " + std::to_string(run.stage1_miou));

  const GridSearchResult gs = grid_search_theta_alpha(model, tc.theta_alpha_candidates, data.val,
                                                      tc.crf_iters_test, tc.backend);
  run.theta_alpha = gs.best;
  model.crf.theta_alpha = gs.best;
  tc.crf.theta_alpha = gs.best;
  run.manual_miou = evaluate(model, data.test, {true, tc.crf_iters_test, tc.backend}).miou();
  say("theta_alpha " + std::to_string(gs.best) + ", manual CRF test mIOU " +
      std::to_string(run.manual_miou));

  const LossCurve s2 = train_stage2(model, data.train_crops, nullptr, tc, log);
  run.curve.rows.insert(run.curve.rows.end(), s2.rows.begin(), s2.rows.end());
  run.e2e_miou = evaluate(model, data.test, {true, tc.crf_iters_test, tc.backend}).miou();
  run.learned_crf = model.crf;
  say("stage 2 test mIOU " + std::to_string(run.e2e_miou));
  return run;
}

}  // namespace pcseg
