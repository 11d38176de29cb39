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
// Trains a small network on two synthetic rooms, then scores a third room
// with and without the CRF.

#include <cstdio>

#include "pcseg/pcseg.hpp"

int main() {
  using namespace pcseg;
  SynthSceneSpec scene;
  scene.density = 150.0;
  std::vector<LabeledPointCloud> rooms;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    scene.seed = s;
    rooms.push_back(synthesize_room(scene));
  }
  const LabeledPointCloud test = rooms.back();
  rooms.pop_back();

  TrainConfig config;
  config.grid.voxel_size = 0.1;
  config.fcnn.widths = {8, 16, 16, 16};
  config.stage1.epochs = 8;
  config.stage2.epochs = 1;
  config.seed = 42;
  Model model = make_model(config);

  const auto crops = training_crops(rooms, config);
  const auto log = [](const CurveRow& r) {
    std::printf("stage %d epoch %d loss %.4f\n", r.stage, r.epoch, r.loss);
  };
  train_stage1(model, crops, nullptr, config, log);
  train_stage2(model, crops, nullptr, config, log);

  std::vector<PreparedCloud> eval{prepare_cloud(test, model)};
  for (bool crf : {false, true}) {
    const Evaluation e = evaluate(model, eval, {crf, kTestCrfIterations, config.backend});
    std::printf("\n%s\n%s", crf ? "with CRF" : "network only",
                report_table(scores(e.cm), synth_class_names()).c_str());
  }
  return 0;
}
