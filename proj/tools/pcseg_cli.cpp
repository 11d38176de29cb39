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
// pcseg: command-line front end for the segmentation pipeline.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcseg/pcseg.hpp"

namespace fs = std::filesystem;
using namespace pcseg;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string crf = "on";
  int crf_iters = kTestCrfIterations;
  std::string backend = "lattice";
  std::string out = ".";
  std::vector<std::string> inputs;
  std::string checkpoint;
  std::string pred;
  std::string gt;
  std::string format = "xyzrgbl-ascii";
  int rooms = 1;
  int labels = 0;
};

KeyValueConfig load_config(const Options& o) {
  return o.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config);
}

bool crf_enabled(const Options& o) { return o.crf == "on"; }

fs::path output_dir(const Options& o) {
  fs::create_directories(o.out);
  return fs::path(o.out);
}

std::vector<LabeledPointCloud> load_all(const std::vector<std::string>& paths, CloudFormat format,
                                        int label_count) {
  std::vector<LabeledPointCloud> out;
  for (const auto& p : paths) out.push_back(load_cloud(p, format, label_count));
  return out;
}

std::vector<PreparedCloud> prepare_all(const std::vector<LabeledPointCloud>& clouds,
                                       const Model& model, const TrainConfig& tc) {
  std::vector<PreparedCloud> out;
  for (const auto& c : clouds) out.push_back(prepare_cloud(c, model, tc.crop_size, tc.keep_full_z));
  return out;
}

int run_synth(const Options& o) {
  KeyValueConfig kv = load_config(o);
  SynthSceneSpec spec = parse_synth_spec(kv);
  kv.check_all_used();
  if (o.seed) spec.seed = *o.seed;
  PCSG_CHECK(o.rooms >= 1, "synth: --rooms must be >= 1");
  const fs::path dir = output_dir(o);
  for (int k = 0; k < o.rooms; ++k) {
    SynthSceneSpec s = spec;
    s.seed = spec.seed + static_cast<std::uint64_t>(k);
    const LabeledPointCloud room = synthesize_room(s);
    char name[64];
    std::snprintf(name, sizeof name, "room_%03d.txt", k);
    save_cloud(room, (dir / name).string(), CloudFormat::kXyzRgbLabel);
    std::cout << (dir / name).string() << ": " << room.size() << " points\n";
  }
  return 0;
}

int run_train(const Options& o) {
  KeyValueConfig kv = load_config(o);
  RunConfig rc = parse_run_config(kv);
  kv.check_all_used();
  TrainConfig& tc = rc.train;
  if (o.seed) tc.seed = *o.seed;
  tc.backend = parse_backend(o.backend);
  tc.validate();
  PCSG_CHECK(!rc.train_files.empty(), "train: config lists no data.train files");
  const int labels = static_cast<int>(tc.fcnn.label_count);
  const auto train = load_all(rc.train_files, rc.format, labels);
  const auto val = load_all(rc.val_files, rc.format, labels);
  const LabeledPointCloud& first = train.front();
  tc.fcnn.in_channels = 1 + (first.has_color() ? 3 : 0) + (first.has_intensity() ? 1 : 0);
  Model model = make_model(tc);
  model.intensity = intensity_stats(train);
  const auto crops = training_crops(train, tc);
  std::vector<PreparedCloud> prepared_val = prepare_all(val, model, tc);
  auto* validation = prepared_val.empty() ? nullptr : &prepared_val;

  const fs::path dir = output_dir(o);
  const EpochCallback log = [](const CurveRow& r) {
    std::printf("stage %d epoch %d %s loss %.6f", r.stage, r.epoch, r.split.c_str(), r.loss);
    if (!std::isnan(r.miou)) std::printf(" mIOU %.4f", r.miou);
    std::printf("\n");
    std::fflush(stdout);
  };
  LossCurve curve = train_stage1(model, crops, validation, tc, log);
  save_model((dir / "stage1.ckpt").string(), model);
  if (crf_enabled(o) && rc.stage2) {
    const LossCurve s2 = train_stage2(model, crops, validation, tc, log);
    curve.rows.insert(curve.rows.end(), s2.rows.begin(), s2.rows.end());
  }
  save_model((dir / "model.ckpt").string(), model);
  curve.save((dir / "loss_curve.csv").string());
  std::cout << "wrote " << (dir / "model.ckpt").string() << "\n";
  return 0;
}

int run_infer(const Options& o) {
  PCSG_CHECK(!o.checkpoint.empty(), "infer: --checkpoint is required");
  PCSG_CHECK(!o.inputs.empty(), "infer: --input is required");
  PCSG_CHECK(o.crf_iters >= 1, "infer: --crf-iters must be >= 1");
  KeyValueConfig kv = load_config(o);
  const RunConfig rc = parse_run_config(kv);
  kv.check_all_used();
  const Model model = load_model(o.checkpoint);
  const CloudFormat format = parse_cloud_format(o.format);
  const PredictOptions opts{crf_enabled(o), o.crf_iters, parse_backend(o.backend)};
  const fs::path dir = output_dir(o);
  for (const auto& path : o.inputs) {
    const LabeledPointCloud cloud =
        load_cloud(path, format, static_cast<int>(model.net.config().label_count));
    PreparedCloud pc = prepare_cloud(cloud, model, rc.train.crop_size, rc.train.keep_full_z);
    const Prediction p = predict(model, pc, opts);
    const fs::path target = dir / (fs::path(path).stem().string() + ".pred.txt");
    save_predictions(cloud, p.labels, target.string(), PredictionFormat::kAscii);
    std::cout << target.string() << ": " << cloud.size() << " points\n";
  }
  return 0;
}

int run_eval(const Options& o) {
  PCSG_CHECK(!o.pred.empty() && !o.gt.empty(), "eval: --pred and --gt are required");
  const CloudFormat format = parse_cloud_format(o.format);
  const LabeledPointCloud pred = load_cloud(o.pred, format, o.labels);
  const LabeledPointCloud gt = load_cloud(o.gt, format, o.labels);
  PCSG_CHECK(pred.size() == gt.size(), "eval: ", pred.size(), " predictions for ", gt.size(),
             " ground-truth points");
  const int labels = o.labels > 0 ? o.labels : std::max(pred.label_count, gt.label_count);
  std::vector<int> p(pred.size()), g(gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p[i] = pred.points[i].label.value_or(-1);
    g[i] = gt.points[i].label.value_or(-1);
    PCSG_CHECK(g[i] < 0 || p[i] >= 0, "eval: point ", i, " has no prediction");
  }
  ConfusionMatrix cm(static_cast<std::size_t>(labels));
  cm.accumulate(g, p);
  const Scores<double> s = scores(cm);
  const std::vector<std::string> names =
      labels == kSynthClassCount ? synth_class_names() : std::vector<std::string>{};
  const fs::path dir = output_dir(o);
  std::ofstream(dir / "metrics.csv") << report_csv(s, names);
  const std::string table = report_table(s, names);
  std::ofstream(dir / "metrics.txt") << table;
  std::cout << table;
  return 0;
}

int run_gridsearch(const Options& o) {
  PCSG_CHECK(!o.checkpoint.empty(), "gridsearch: --checkpoint is required");
  KeyValueConfig kv = load_config(o);
  const RunConfig rc = parse_run_config(kv);
  kv.check_all_used();
  PCSG_CHECK(!rc.val_files.empty(), "gridsearch: config lists no data.val files");
  Model model = load_model(o.checkpoint);
  const auto val = load_all(rc.val_files, rc.format,
                            static_cast<int>(model.net.config().label_count));
  std::vector<PreparedCloud> prepared = prepare_all(val, model, rc.train);
  std::vector<double> candidates = rc.train.theta_alpha_candidates;
  if (candidates.empty()) candidates = {model.crf.theta_alpha};
  const GridSearchResult r =
      grid_search_theta_alpha(model, candidates, prepared, o.crf_iters, parse_backend(o.backend));
  const fs::path dir = output_dir(o);
  std::ofstream csv(dir / "gridsearch.csv");
  csv << "theta_alpha,miou\n";
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    csv << r.candidates[i] << "," << r.miou[i] << "\n";
    std::printf("theta_alpha %.3f  mIOU %.4f\n", r.candidates[i], r.miou[i]);
  }
  model.crf.theta_alpha = r.best;
  save_model((dir / "model.ckpt").string(), model);
  std::printf("best theta_alpha %.3f\n", r.best);
  return 0;
}

int run_export(const Options& o) {
  PCSG_CHECK(!o.inputs.empty(), "export-ply: --input is required");
  const CloudFormat format = parse_cloud_format(o.format);
  const fs::path dir = output_dir(o);
  for (const auto& path : o.inputs) {
    const LabeledPointCloud cloud = load_cloud(path, format, o.labels);
    std::vector<int> labels(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) labels[i] = cloud.points[i].label.value_or(-1);
    const fs::path target = dir / (fs::path(path).stem().string() + ".ply");
    save_predictions(cloud, labels, target.string(), PredictionFormat::kPlyBinary);
    std::cout << target.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud semantic segmentation: 3D FCNN, trilinear interpolation, dense CRF"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "run configuration (section.key = value)");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--out", o.out, "output directory");
  };
  auto crf_flags = [&](CLI::App* cmd) {
    cmd->add_option("--crf", o.crf, "use the CRF")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--backend", o.backend, "CRF filter backend")
        ->check(CLI::IsMember({"bruteforce", "lattice"}));
  };
  auto format_flag = [&](CLI::App* cmd) {
    cmd->add_option("--format", o.format, "cloud format")
        ->check(CLI::IsMember({"xyzrgbl-ascii", "xyz-label-ascii"}));
  };

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic labeled rooms");
  common(synth);
  synth->add_option("--rooms", o.rooms, "number of rooms");

  CLI::App* train = app.add_subcommand("train", "stage 1, then stage 2 unless --crf off");
  common(train);
  crf_flags(train);

  CLI::App* infer = app.add_subcommand("infer", "predict per-point labels");
  common(infer);
  crf_flags(infer);
  format_flag(infer);
  infer->add_option("--crf-iters", o.crf_iters, "mean-field iterations");
  infer->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
  infer->add_option("--input", o.inputs, "input clouds")->required();

  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  common(eval);
  format_flag(eval);
  eval->add_option("--pred", o.pred, "predicted cloud")->required();
  eval->add_option("--gt", o.gt, "ground-truth cloud")->required();
  eval->add_option("--labels", o.labels, "label count (default: inferred)");

  CLI::App* grid = app.add_subcommand("gridsearch", "pick theta_alpha on the validation rooms");
  common(grid);
  crf_flags(grid);
  grid->add_option("--crf-iters", o.crf_iters, "mean-field iterations");
  grid->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();

  CLI::App* exp = app.add_subcommand("export-ply", "write labeled clouds as colored PLY");
  common(exp);
  format_flag(exp);
  exp->add_option("--input", o.inputs, "labeled clouds")->required();
  exp->add_option("--labels", o.labels, "label count (default: inferred)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (synth->parsed()) return run_synth(o);
    if (train->parsed()) return run_train(o);
    if (infer->parsed()) return run_infer(o);
    if (eval->parsed()) return run_eval(o);
    if (grid->parsed()) return run_gridsearch(o);
    if (exp->parsed()) return run_export(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
