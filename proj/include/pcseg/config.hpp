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

// Run configuration: a plain-text file of `section.key = value` lines.
// `#` starts a comment; blank lines are ignored; lists are comma separated.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pcseg/crf.hpp"
#include "pcseg/error.hpp"
#include "pcseg/synth.hpp"
#include "pcseg/train.hpp"

namespace pcseg {

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<config>") {
    KeyValueConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      PCSG_CHECK(eq != std::string::npos, origin, ":", lineno, ": expected 'section.key = value'");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      PCSG_CHECK(key.find('.') != std::string::npos && key.front() != '.' && key.back() != '.',
                 origin, ":", lineno, ": key '", key, "' must look like section.key");
      PCSG_CHECK(!c.values_.count(key), origin, ":", lineno, ": duplicate key '", key, "'");
      c.values_[key] = value;
    }
    return c;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    PCSG_CHECK(in.good(), "cannot open config '", path, "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get(const std::string& key, double fallback) const {
    if (!has(key)) return get(key, std::string()), fallback;
    return to_double(key, get(key, std::string()));
  }

  long long get(const std::string& key, long long fallback) const {
    if (!has(key)) return get(key, std::string()), fallback;
    const std::string v = get(key, std::string());
    std::size_t pos = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    PCSG_CHECK(pos == v.size() && !v.empty(), "config: '", key, "' expects an integer, got '", v, "'");
    return out;
  }

  bool get(const std::string& key, bool fallback) const {
    if (!has(key)) return get(key, std::string()), fallback;
    const std::string v = get(key, std::string());
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    detail::fail("config: '", key, "' expects a boolean, got '", v, "'");
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key, std::string()));
    std::string item;
    while (std::getline(ss, item, ','))
      if (const std::string t = trim(item); !t.empty()) out.push_back(t);
    return out;
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& s : get_list(key)) out.push_back(to_double(key, s));
    return out;
  }

  /// Throws on keys no getter has asked for, which catches typos.
  void check_all_used() const {
    for (const auto& [k, v] : values_)
      PCSG_CHECK(used_.count(k), "config: unknown key '", k, "'");
  }

 private:
  static std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
  }

  static double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    PCSG_CHECK(pos == v.size() && !v.empty(), "config: '", key, "' expects a number, got '", v, "'");
    return out;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

/// Everything `train`, `infer` and `gridsearch` need beyond the model.
struct RunConfig {
  TrainConfig train;
  std::vector<std::string> train_files;
  std::vector<std::string> val_files;
  std::vector<std::string> test_files;
  CloudFormat format = CloudFormat::kXyzRgbLabel;
  bool stage2 = true;
};

inline RunConfig parse_run_config(const KeyValueConfig& kv) {
  RunConfig rc;
  TrainConfig& t = rc.train;
  auto size = [&](const std::string& key, std::size_t fallback) {
    const long long v = kv.get(key, static_cast<long long>(fallback));
    PCSG_CHECK(v >= 0, "config: '", key, "' must be >= 0");
    return static_cast<std::size_t>(v);
  };
  auto integer = [&](const std::string& key, int fallback) {
    return static_cast<int>(kv.get(key, static_cast<long long>(fallback)));
  };

  rc.train_files = kv.get_list("data.train");
  rc.val_files = kv.get_list("data.val");
  rc.test_files = kv.get_list("data.test");
  rc.format = parse_cloud_format(kv.get("data.format", std::string("xyzrgbl-ascii")));
  t.crop_size = kv.get("data.crop_size", t.crop_size);
  t.train_overlap = kv.get("data.train_overlap", t.train_overlap);
  t.keep_full_z = kv.get("data.keep_full_z", t.keep_full_z);

  t.grid.voxel_size = kv.get("grid.voxel_size", t.grid.voxel_size);
  t.grid.max_dims = size("grid.max_dims", t.grid.max_dims);

  t.fcnn.label_count = size("fcnn.label_count", t.fcnn.label_count);
  t.fcnn.downsample_factor = size("fcnn.downsample_factor", t.fcnn.downsample_factor);
  if (kv.has("fcnn.widths")) {
    t.fcnn.widths.clear();
    for (double w : kv.get_doubles("fcnn.widths")) {
      PCSG_CHECK(w >= 1 && w == std::floor(w), "config: fcnn.widths must be positive integers");
      t.fcnn.widths.push_back(static_cast<std::size_t>(w));
    }
    t.fcnn.residual_blocks = t.fcnn.widths.size() - 1;
  }

  t.augment.color_range = kv.get("augment.color_range", t.augment.color_range);
  t.augment.angle_max = kv.get("augment.angle_max", t.augment.angle_max);
  t.augment.scale_low = kv.get("augment.scale_low", t.augment.scale_low);
  t.augment.scale_high = kv.get("augment.scale_high", t.augment.scale_high);
  if (kv.has("augment.subsample")) {
    // threshold:factor pairs
    t.augment.subsample_table.clear();
    for (const std::string& item : kv.get_list("augment.subsample")) {
      const auto colon = item.find(':');
      PCSG_CHECK(colon != std::string::npos, "config: augment.subsample expects threshold:factor");
      t.augment.subsample_table.push_back(
          {static_cast<std::size_t>(std::stod(item.substr(0, colon))), std::stod(item.substr(colon + 1))});
    }
  }

  t.stage1.epochs = integer("stage1.epochs", t.stage1.epochs);
  t.stage1.lr = kv.get("stage1.lr", t.stage1.lr);
  t.stage1.decay_every = integer("stage1.decay_every", t.stage1.decay_every);
  t.stage1.decay_factor = kv.get("stage1.decay_factor", t.stage1.decay_factor);
  t.stage1.momentum = kv.get("stage1.momentum", t.stage1.momentum);
  t.stage1.augment = kv.get("stage1.augment", t.stage1.augment);

  rc.stage2 = kv.get("stage2.enabled", rc.stage2);
  t.stage2.epochs = integer("stage2.epochs", t.stage2.epochs);
  t.stage2.lr = kv.get("stage2.lr", t.stage2.lr);
  t.stage2.weight_lr_mult = kv.get("stage2.weight_lr_mult", t.stage2.weight_lr_mult);
  t.stage2.compat_lr_mult = kv.get("stage2.compat_lr_mult", t.stage2.compat_lr_mult);
  t.stage2.momentum = kv.get("stage2.momentum", t.stage2.momentum);
  t.stage2.augment = kv.get("stage2.augment", t.stage2.augment);
  t.stage2.learn_crf = kv.get("stage2.learn_crf", t.stage2.learn_crf);

  t.crf = CrfParams::potts(t.fcnn.label_count);
  t.crf.w_spatial = kv.get("crf.w_spatial", t.crf.w_spatial);
  t.crf.w_bilateral = kv.get("crf.w_bilateral", t.crf.w_bilateral);
  t.crf.normalize = kv.get("crf.normalize", t.crf.normalize);
  t.crf.theta_alpha = kv.get("crf.theta_alpha", t.crf.theta_alpha);
  PCSG_CHECK(t.crf.theta_alpha >= kThetaAlphaMin && t.crf.theta_alpha <= kThetaAlphaMax,
             "config: crf.theta_alpha outside [", kThetaAlphaMin, ", ", kThetaAlphaMax, "] m");
  t.crf_iters_train = integer("crf.iters_train", t.crf_iters_train);
  t.crf_iters_test = integer("crf.iters_test", t.crf_iters_test);
  t.backend = parse_backend(kv.get("crf.backend", std::string(backend_name(t.backend))));
  t.theta_alpha_candidates = kv.get_doubles("crf.theta_alpha_candidates");

  t.seed = static_cast<std::uint64_t>(kv.get("train.seed", static_cast<long long>(t.seed)));
  t.eval_every = integer("train.eval_every", t.eval_every);
  t.validate();
  return rc;
}

inline SynthSceneSpec parse_synth_spec(const KeyValueConfig& kv) {
  SynthSceneSpec s;
  auto vec = [&](const std::string& key, Vec3 fallback) {
    if (!kv.has(key)) return fallback;
    const std::vector<double> v = kv.get_doubles(key);
    PCSG_CHECK(v.size() == 3, "config: '", key, "' expects three numbers");
    return Vec3{v[0], v[1], v[2]};
  };
  s.size_min = vec("synth.size_min", s.size_min);
  s.size_max = vec("synth.size_max", s.size_max);
  s.density = kv.get("synth.density", s.density);
  s.color_sigma = kv.get("synth.color_sigma", s.color_sigma);
  s.label_noise = kv.get("synth.label_noise", s.label_noise);
  s.boxes_min = static_cast<int>(kv.get("synth.boxes_min", static_cast<long long>(s.boxes_min)));
  s.boxes_max = static_cast<int>(kv.get("synth.boxes_max", static_cast<long long>(s.boxes_max)));
  s.pillars_min = static_cast<int>(kv.get("synth.pillars_min", static_cast<long long>(s.pillars_min)));
  s.pillars_max = static_cast<int>(kv.get("synth.pillars_max", static_cast<long long>(s.pillars_max)));
  s.seed = static_cast<std::uint64_t>(kv.get("synth.seed", static_cast<long long>(s.seed)));
  s.validate();
  return s;
}

}  // namespace pcseg
