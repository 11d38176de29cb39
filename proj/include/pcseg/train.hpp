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

// Two-stage training. Stage 1 fits the network through trilinear
// interpolation on a point-level loss; stage 2 inserts the CRF before the
// loss and trains everything jointly. One crop is one batch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "pcseg/augment.hpp"
#include "pcseg/checkpoint.hpp"
#include "pcseg/cloud.hpp"
#include "pcseg/crf.hpp"
#include "pcseg/error.hpp"
#include "pcseg/fcnn.hpp"
#include "pcseg/metrics.hpp"
#include "pcseg/ops.hpp"
#include "pcseg/optim.hpp"
#include "pcseg/tensor.hpp"
#include "pcseg/trilinear.hpp"
#include "pcseg/voxelizer.hpp"

namespace pcseg {

inline constexpr double kThetaAlphaMin = 0.1;
inline constexpr double kThetaAlphaMax = 3.2;

struct Stage1Config {
  int epochs = 200;
  double lr = 1e-3;
  int decay_every = 50;       // epochs between learning-rate drops
  double decay_factor = 10.0;
  double momentum = 0.9;
  bool augment = true;
};

struct Stage2Config {
  int epochs = 2;
  double lr = 1e-5;
  double weight_lr_mult = 1e4;  // w_spatial and w_bilateral
  double compat_lr_mult = 1e3;  // compatibility matrix
  double momentum = 0.9;
  bool augment = true;
  bool learn_crf = true;        // false keeps the manual initialization
};

struct TrainConfig {
  FcnnConfig fcnn;
  GridOptions grid;
  double crop_size = 5.0;
  double train_overlap = 0.5;
  bool keep_full_z = true;
  AugmentConfig augment;
  Stage1Config stage1;
  Stage2Config stage2;
  int crf_iters_train = kTrainCrfIterations;
  int crf_iters_test = kTestCrfIterations;
  CrfParams crf = CrfParams::potts(5);
  std::vector<double> theta_alpha_candidates;
  FilterBackend backend = FilterBackend::kPermutohedral;
  int eval_every = 0;  // validation cadence in epochs, 0 = never
  std::uint64_t seed = 0;

  void validate() const {
    fcnn.validate();
    augment.validate();
    PCSG_CHECK(grid.voxel_size > 0.0, "config: voxel size must be positive");
    PCSG_CHECK(crop_size > train_overlap && train_overlap >= 0.0,
               "config: need crop size > overlap >= 0");
    PCSG_CHECK(stage1.epochs >= 0 && stage2.epochs >= 0, "config: epochs must be >= 0");
    PCSG_CHECK(stage1.lr >= 0.0 && stage2.lr >= 0.0, "config: learning rates must be >= 0");
    PCSG_CHECK(stage2.weight_lr_mult >= 0.0 && stage2.compat_lr_mult >= 0.0,
               "config: learning-rate multipliers must be >= 0");
    PCSG_CHECK(stage1.decay_every >= 1 && stage1.decay_factor > 0.0,
               "config: invalid learning-rate decay");
    PCSG_CHECK(crf_iters_train >= 1 && crf_iters_test >= 1, "config: CRF iterations must be >= 1");
    crf.validate();
    PCSG_CHECK(crf.label_count() == fcnn.label_count, "config: CRF has ", crf.label_count(),
               " labels, network has ", fcnn.label_count);
    for (double t : theta_alpha_candidates)
      PCSG_CHECK(t >= kThetaAlphaMin && t <= kThetaAlphaMax, "config: theta_alpha candidate ", t,
                 " outside [", kThetaAlphaMin, ", ", kThetaAlphaMax, "] m");
    PCSG_CHECK(eval_every >= 0, "config: eval_every must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Loss

struct LossResult {
  double loss = 0.0;
  Tensor grad;            // same shape as the input
  std::size_t count = 0;  // labeled points
};

namespace detail {

inline std::size_t labeled_count(std::span<const int> labels, std::size_t label_count) {
  std::size_t n = 0;
  for (int y : labels) {
    if (y < 0) continue;
    PCSG_CHECK(static_cast<std::size_t>(y) < label_count, "kl_loss: label ", y,
               " out of range for ", label_count, " classes");
    ++n;
  }
  PCSG_CHECK(n > 0, "kl_loss: every point is unlabeled");
  return n;
}

}  // namespace detail

/// Mean -log p(true label) over labeled points of an (N, L) probability
/// matrix; negative labels are skipped. grad is dL/dp.
inline LossResult kl_loss(const Tensor& probs, std::span<const int> labels) {
  PCSG_CHECK(probs.rank() == 2 && probs.dim(0) == labels.size(), "kl_loss: probabilities ",
             shape_string(probs.shape()), " vs ", labels.size(), " labels");
  const std::size_t nl = probs.dim(1);
  LossResult r;
  r.count = detail::labeled_count(labels, nl);
  r.grad = Tensor(probs.shape());
  const double inv = 1.0 / static_cast<double>(r.count);
  constexpr double kFloor = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const std::size_t k = i * nl + static_cast<std::size_t>(labels[i]);
    const double p = std::max(probs[k], kFloor);
    r.loss -= std::log(p);
    r.grad[k] = -inv / p;
  }
  r.loss *= inv;
  return r;
}

/// Same loss on softmax(logits); grad is dL/dlogits = (p - onehot) / N.
inline LossResult kl_loss_logits(const Tensor& logits, std::span<const int> labels) {
  PCSG_CHECK(logits.rank() == 2 && logits.dim(0) == labels.size(), "kl_loss: logits ",
             shape_string(logits.shape()), " vs ", labels.size(), " labels");
  const std::size_t nl = logits.dim(1);
  LossResult r;
  r.count = detail::labeled_count(labels, nl);
  r.grad = Tensor(logits.shape());
  const double inv = 1.0 / static_cast<double>(r.count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const double* row = logits.data() + i * nl;
    const double m = *std::max_element(row, row + nl);
    double z = 0.0;
    for (std::size_t l = 0; l < nl; ++l) z += std::exp(row[l] - m);
    const double log_z = m + std::log(z);
    const std::size_t y = static_cast<std::size_t>(labels[i]);
    r.loss += log_z - row[y];
    for (std::size_t l = 0; l < nl; ++l)
      r.grad[i * nl + l] = inv * (std::exp(row[l] - log_z) - (l == y ? 1.0 : 0.0));
  }
  r.loss *= inv;
  return r;
}

// ---------------------------------------------------------------------------
// Model

/// Network, CRF and the preprocessing they were trained with.
struct Model {
  Fcnn net;
  CrfParams crf;
  GridOptions grid;
  std::optional<IntensityStats> intensity;
};

inline Model make_model(const TrainConfig& config) {
  config.validate();
  Model m;
  m.net = Fcnn::build(config.fcnn, config.seed);
  m.crf = config.crf;
  m.grid = config.grid;
  m.grid.pad_multiple = config.fcnn.downsample_factor;
  return m;
}

/// Mean and max-min range of intensity over the given clouds, if they carry it.
inline std::optional<IntensityStats> intensity_stats(const std::vector<LabeledPointCloud>& clouds) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : clouds) {
    if (!c.has_intensity()) continue;
    for (const auto& p : c.points) {
      lo = std::min(lo, *p.intensity);
      hi = std::max(hi, *p.intensity);
      sum += *p.intensity;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return IntensityStats{sum / static_cast<double>(n), hi > lo ? hi - lo : 1.0};
}

inline void save_model(const std::string& path, const Model& m) {
  std::vector<NamedTensor> t;
  m.net.append_to(t);
  const FcnnConfig& c = m.net.config();
  std::vector<double> arch = {static_cast<double>(c.in_channels),
                              static_cast<double>(c.label_count),
                              static_cast<double>(c.downsample_factor),
                              static_cast<double>(c.residual_blocks),
                              static_cast<double>(c.convs_per_block)};
  for (std::size_t w : c.widths) arch.push_back(static_cast<double>(w));
  t.push_back({"config.fcnn", Tensor({arch.size()}, arch)});
  t.push_back({"config.grid", Tensor({2}, {m.grid.voxel_size, static_cast<double>(m.grid.max_dims)})});
  if (m.intensity)
    t.push_back({"config.intensity", Tensor({2}, {m.intensity->mean, m.intensity->range})});
  t.push_back({"crf.weights", Tensor({2}, {m.crf.w_spatial, m.crf.w_bilateral})});
  t.push_back({"crf.compat", m.crf.compat});
  t.push_back({"crf.theta", Tensor({3}, {m.crf.theta_alpha, m.crf.theta_beta, m.crf.theta_gamma})});
  t.push_back({"crf.normalize", Tensor({1}, {m.crf.normalize ? 1.0 : 0.0})});
  save_tensors(path, t);
}

inline Model load_model(const std::string& path) {
  const std::vector<NamedTensor> t = load_tensors(path);
  const Tensor& arch = find_tensor(t, "config.fcnn");
  PCSG_CHECK(arch.size() >= 6, "checkpoint: malformed config.fcnn");
  FcnnConfig c;
  c.in_channels = static_cast<std::size_t>(arch[0]);
  c.label_count = static_cast<std::size_t>(arch[1]);
  c.downsample_factor = static_cast<std::size_t>(arch[2]);
  c.residual_blocks = static_cast<std::size_t>(arch[3]);
  c.convs_per_block = static_cast<std::size_t>(arch[4]);
  c.widths.clear();
  for (std::size_t i = 5; i < arch.size(); ++i) c.widths.push_back(static_cast<std::size_t>(arch[i]));
  Model m;
  m.net = Fcnn::build(c, 0);
  m.net.load(t);
  const Tensor& grid = find_tensor(t, "config.grid");
  m.grid.voxel_size = grid[0];
  m.grid.max_dims = static_cast<std::size_t>(grid[1]);
  m.grid.pad_multiple = c.downsample_factor;
  for (const auto& nt : t)
    if (nt.name == "config.intensity") m.intensity = IntensityStats{nt.value[0], nt.value[1]};
  const Tensor& w = find_tensor(t, "crf.weights");
  const Tensor& theta = find_tensor(t, "crf.theta");
  m.crf.w_spatial = w[0];
  m.crf.w_bilateral = w[1];
  m.crf.compat = find_tensor(t, "crf.compat");
  m.crf.theta_alpha = theta[0];
  m.crf.theta_beta = theta[1];
  m.crf.theta_gamma = theta[2];
  m.crf.normalize = find_tensor(t, "crf.normalize")[0] != 0.0;
  m.crf.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Per-crop forward and backward

/// A crop voxelized for a model, with interpolation weights and CRF inputs.
/// The CRF filters are built on first use and rebuilt when the bandwidths
/// or the backend change.
struct PreparedCrop {
  VoxelGrid grid;
  InterpWeights weights;
  std::vector<int> labels;
  std::vector<std::size_t> indices;  // positions in the source cloud
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;          // empty without color

  const CrfFilters& filters(const CrfParams& p, FilterBackend backend) {
    const auto key = std::make_tuple(p.theta_alpha, p.theta_beta, p.theta_gamma, p.normalize, backend);
    if (!filters_ || key != key_) {
      filters_ = std::make_shared<CrfFilters>(positions, colors, p, backend);
      key_ = key;
    }
    return *filters_;
  }

 private:
  std::shared_ptr<CrfFilters> filters_;
  std::tuple<double, double, double, bool, FilterBackend> key_{};
};

inline PreparedCrop prepare_crop(const LabeledPointCloud& crop, const Model& model,
                                 std::vector<std::size_t> indices = {}) {
  PreparedCrop p;
  GridOptions opts = model.grid;
  opts.pad_multiple = model.net.config().downsample_factor;
  p.grid = build_grid(crop, opts, model.intensity);
  PCSG_CHECK(p.grid.channel_count() == model.net.config().in_channels, "crop has ",
             p.grid.channel_count(), " input channels, network expects ",
             model.net.config().in_channels);
  p.weights = compute_weights(crop, model.net.coarse_grid(p.grid));
  p.labels.resize(crop.size());
  p.positions.resize(crop.size());
  for (std::size_t i = 0; i < crop.size(); ++i) {
    p.labels[i] = crop.points[i].label.value_or(-1);
    p.positions[i] = crop.points[i].position;
  }
  if (crop.has_color()) {
    p.colors.resize(crop.size());
    for (std::size_t i = 0; i < crop.size(); ++i) p.colors[i] = *crop.points[i].color;
  }
  p.indices = std::move(indices);
  return p;
}

struct StepResult {
  double loss = 0.0;
  std::vector<Tensor> net_grads;
  CrfGrads crf_grads;      // empty unless the CRF was used
  Tensor probs;            // (N, L) final per-point marginals
};

/// Loss and gradients for one crop. With use_crf the point logits feed the
/// CRF (unaries = -logits) and the loss is taken on its marginals.
inline StepResult crop_step(const Model& model, PreparedCrop& crop, bool use_crf, int crf_iters,
                            FilterBackend backend, bool backward = true) {
  Fcnn::Trace trace = model.net.forward_trace(crop.grid.channels);
  const Tensor& voxel_logits = trace.tape.value(trace.output);
  const Tensor logits = interpolate(crop.weights, voxel_logits);
  StepResult r;
  Tensor grad_logits;
  bool labeled = false;
  for (int y : crop.labels) labeled = labeled || y >= 0;
  if (!use_crf) {
    r.probs = ops::softmax_rows(logits);
    if (labeled) {
      LossResult loss = kl_loss_logits(logits, crop.labels);
      r.loss = loss.loss;
      grad_logits = std::move(loss.grad);
    }
  } else {
    const CrfFilters& filters = crop.filters(model.crf, backend);
    Tensor unaries = logits;
    unaries *= -1.0;
    CrfTrace ct = crf_forward(unaries, model.crf, filters, crf_iters);
    r.probs = ct.output();
    if (labeled) {
      LossResult loss = kl_loss(ct.output(), crop.labels);
      r.loss = loss.loss;
      if (backward) {
        r.crf_grads = crf_backward(ct, model.crf, filters, loss.grad);
        grad_logits = r.crf_grads.unaries;
        grad_logits *= -1.0;
      }
    }
  }
  if (backward && labeled) {
    const Tensor grad_voxels = splat(crop.weights, grad_logits, voxel_logits.shape());
    r.net_grads = model.net.backward(trace, grad_voxels);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation

/// A cloud split into zero-overlap crops, so each point is predicted once.
struct PreparedCloud {
  std::size_t point_count = 0;
  std::vector<int> labels;
  std::vector<PreparedCrop> crops;
};

inline PreparedCloud prepare_cloud(const LabeledPointCloud& cloud, const Model& model,
                                   double crop_size = 5.0, bool keep_full_z = true) {
  PreparedCloud pc;
  pc.point_count = cloud.size();
  pc.labels.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) pc.labels[i] = cloud.points[i].label.value_or(-1);
  for (Crop& c : crop_subareas(cloud, crop_size, 0.0, keep_full_z))
    pc.crops.push_back(prepare_crop(c.cloud, model, std::move(c.indices)));
  return pc;
}

struct PredictOptions {
  bool use_crf = true;
  int crf_iters = kTestCrfIterations;
  FilterBackend backend = FilterBackend::kPermutohedral;
};

struct Prediction {
  std::vector<int> labels;
  double loss = 0.0;  // mean over crops with labeled points
};

inline Prediction predict(const Model& model, PreparedCloud& cloud, const PredictOptions& opts) {
  Prediction p;
  p.labels.assign(cloud.point_count, -1);
  std::size_t scored = 0;
  for (PreparedCrop& crop : cloud.crops) {
    StepResult r = crop_step(model, crop, opts.use_crf, opts.crf_iters, opts.backend, false);
    const std::size_t nl = r.probs.dim(1);
    for (std::size_t i = 0; i < crop.indices.size(); ++i) {
      const double* row = r.probs.data() + i * nl;
      p.labels[crop.indices[i]] = static_cast<int>(std::max_element(row, row + nl) - row);
    }
    if (std::any_of(crop.labels.begin(), crop.labels.end(), [](int y) { return y >= 0; })) {
      p.loss += r.loss;
      ++scored;
    }
  }
  if (scored > 0) p.loss /= static_cast<double>(scored);
  return p;
}

struct Evaluation {
  ConfusionMatrix cm;
  double loss = 0.0;
  double miou() const { return scores(cm).mean_iou; }
};

inline Evaluation evaluate(const Model& model, std::vector<PreparedCloud>& clouds,
                           const PredictOptions& opts) {
  PCSG_CHECK(!clouds.empty(), "evaluate: no clouds");
  Evaluation e{ConfusionMatrix(model.net.config().label_count), 0.0};
  for (PreparedCloud& c : clouds) {
    const Prediction p = predict(model, c, opts);
    e.cm.accumulate(c.labels, p.labels);
    e.loss += p.loss;
  }
  e.loss /= static_cast<double>(clouds.size());
  return e;
}

// ---------------------------------------------------------------------------
// Training loops

struct CurveRow {
  int stage = 1;
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double miou = std::numeric_limits<double>::quiet_NaN();
};

struct LossCurve {
  std::vector<CurveRow> rows;

  std::string csv() const {
    std::string out = "stage,epoch,split,loss,miou\n";
    char buf[160];
    for (const auto& r : rows) {
      if (std::isnan(r.miou))
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%.17g,\n", r.stage, r.epoch, r.split.c_str(), r.loss);
      else
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%.17g,%.17g\n", r.stage, r.epoch, r.split.c_str(),
                      r.loss, r.miou);
      out += buf;
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    PCSG_CHECK(os.good(), "cannot open '", path, "' for writing");
    os << csv();
  }
};

/// Training crops (with the configured overlap) of every cloud.
inline std::vector<LabeledPointCloud> training_crops(const std::vector<LabeledPointCloud>& clouds,
                                                     const TrainConfig& config) {
  std::vector<LabeledPointCloud> out;
  for (const auto& c : clouds)
    for (Crop& crop : crop_subareas(c, config.crop_size, config.train_overlap, config.keep_full_z))
      out.push_back(std::move(crop.cloud));
  PCSG_CHECK(!out.empty(), "training: empty dataset");
  return out;
}

namespace detail {

inline double stage1_lr(const Stage1Config& c, int epoch) {
  return c.lr / std::pow(c.decay_factor, static_cast<double>(epoch / c.decay_every));
}

/// Invokes step(crop) for every training crop in a seeded random order,
/// augmenting first when asked. Returns the mean loss.
template <typename Step>
double run_epoch(const std::vector<LabeledPointCloud>& crops, const Model& model,
                 const TrainConfig& config, bool augment_crops, Rng& rng, Step&& step) {
  std::vector<std::size_t> order(crops.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  double total = 0.0;
  for (std::size_t k : order) {
    PreparedCrop prepared = augment_crops
                                ? prepare_crop(augment(crops[k], config.augment, rng), model)
                                : prepare_crop(crops[k], model);
    total += step(prepared);
  }
  return total / static_cast<double>(crops.size());
}

}  // namespace detail

/// Observer for per-epoch progress; may be empty.
using EpochCallback = std::function<void(const CurveRow&)>;

/// Stage 1: network + interpolation on the point loss. `validation` may be
/// null; when given and config.eval_every > 0 it is scored at that cadence.
inline LossCurve train_stage1(Model& model, const std::vector<LabeledPointCloud>& crops,
                              std::vector<PreparedCloud>* validation, const TrainConfig& config,
                              const EpochCallback& on_epoch = {}) {
  PCSG_CHECK(!crops.empty(), "stage1: empty dataset");
  Rng rng(config.seed ^ 0x5151u);
  LossCurve curve;
  std::vector<Tensor> velocity(model.net.parameters().size());
  auto emit = [&](CurveRow row) {
    curve.rows.push_back(row);
    if (on_epoch) on_epoch(row);
  };
  for (int epoch = 0; epoch < config.stage1.epochs; ++epoch) {
    const double lr = detail::stage1_lr(config.stage1, epoch);
    const double loss = detail::run_epoch(crops, model, config, config.stage1.augment, rng,
                                          [&](PreparedCrop& c) {
      StepResult r = crop_step(model, c, false, 0, config.backend);
      auto& params = model.net.parameters();
      for (std::size_t i = 0; i < params.size() && !r.net_grads.empty(); ++i)
        sgd_step(params[i].value, r.net_grads[i], velocity[i], lr, config.stage1.momentum);
      return r.loss;
    });
    emit({1, epoch + 1, "train", loss});
    if (validation && config.eval_every > 0 && (epoch + 1) % config.eval_every == 0) {
      const Evaluation e = evaluate(model, *validation, {false, 0, config.backend});
      emit({1, epoch + 1, "val", e.loss, e.miou()});
    }
  }
  return curve;
}

/// Stage 2: network + interpolation + CRF jointly. Bandwidths never change.
inline LossCurve train_stage2(Model& model, const std::vector<LabeledPointCloud>& crops,
                              std::vector<PreparedCloud>* validation, const TrainConfig& config,
                              const EpochCallback& on_epoch = {}) {
  PCSG_CHECK(!crops.empty(), "stage2: empty dataset");
  const Stage2Config& s2 = config.stage2;
  Rng rng(config.seed ^ 0x5252u);
  LossCurve curve;
  std::vector<Tensor> velocity(model.net.parameters().size());
  double v_ws = 0.0, v_wb = 0.0;
  Tensor v_compat;
  auto emit = [&](CurveRow row) {
    curve.rows.push_back(row);
    if (on_epoch) on_epoch(row);
  };
  const PredictOptions eval_opts{true, config.crf_iters_test, config.backend};
  for (int epoch = 0; epoch < s2.epochs; ++epoch) {
    const double loss = detail::run_epoch(crops, model, config, s2.augment, rng,
                                          [&](PreparedCrop& c) {
      StepResult r = crop_step(model, c, true, config.crf_iters_train, config.backend);
      if (r.net_grads.empty()) return r.loss;
      auto& params = model.net.parameters();
      for (std::size_t i = 0; i < params.size(); ++i)
        sgd_step(params[i].value, r.net_grads[i], velocity[i], s2.lr, s2.momentum);
      if (s2.learn_crf) {
        const double lr_w = s2.lr * s2.weight_lr_mult;
        sgd_step(model.crf.w_spatial, r.crf_grads.w_spatial, v_ws, lr_w, s2.momentum);
        sgd_step(model.crf.w_bilateral, r.crf_grads.w_bilateral, v_wb, lr_w, s2.momentum);
        sgd_step(model.crf.compat, r.crf_grads.compat, v_compat, s2.lr * s2.compat_lr_mult,
                 s2.momentum);
      }
      return r.loss;
    });
    emit({2, epoch + 1, "train", loss});
    if (validation && config.eval_every > 0 && (epoch + 1) % config.eval_every == 0) {
      const Evaluation e = evaluate(model, *validation, eval_opts);
      emit({2, epoch + 1, "val", e.loss, e.miou()});
    }
  }
  return curve;
}

struct GridSearchResult {
  double best = 0.0;
  std::vector<double> candidates;
  std::vector<double> miou;  // validation mIOU per candidate
};

/// Plain grid search over theta_alpha on validation mIOU with the CRF at
/// test-time iterations. Ties go to the smaller bandwidth.
inline GridSearchResult grid_search_theta_alpha(const Model& model, std::vector<double> candidates,
                                                std::vector<PreparedCloud>& validation,
                                                int crf_iters = kTestCrfIterations,
                                                FilterBackend backend = FilterBackend::kPermutohedral) {
  PCSG_CHECK(!candidates.empty(), "grid search: no candidates");
  for (double t : candidates)
    PCSG_CHECK(t >= kThetaAlphaMin && t <= kThetaAlphaMax, "grid search: candidate ", t,
               " outside [", kThetaAlphaMin, ", ", kThetaAlphaMax, "] m");
  std::sort(candidates.begin(), candidates.end());
  GridSearchResult r;
  r.candidates = candidates;
  Model trial = model;
  double best = -1.0;
  for (double t : candidates) {
    trial.crf.theta_alpha = t;
    const double m = evaluate(trial, validation, {true, crf_iters, backend}).miou();
    r.miou.push_back(m);
    if (m > best) {
      best = m;
      r.best = t;
    }
  }
  return r;
}

}  // namespace pcseg
