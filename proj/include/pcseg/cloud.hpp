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
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pcseg/error.hpp"

namespace pcseg {

using Vec3 = std::array<double, 3>;

/// One raw 3D observation: position in meters plus optional modalities.
struct PointObservation {
  Vec3 position{};
  std::optional<Vec3> color;         // each channel in [0, 255]
  std::optional<double> intensity;   // sensor units
  std::optional<int> label;          // class id, absent when unlabeled
};

struct Aabb {
  Vec3 min{};
  Vec3 max{};

  bool contains(const Vec3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < min[a] || p[a] > max[a]) return false;
    return true;
  }
  Vec3 extent() const { return {max[0] - min[0], max[1] - min[1], max[2] - min[2]}; }
};

struct LabeledPointCloud {
  std::vector<PointObservation> points;
  Aabb bounds;
  int label_count = 1;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_color() const { return !points.empty() && points.front().color.has_value(); }
  bool has_intensity() const {
    return !points.empty() && points.front().intensity.has_value();
  }
};

/// Tight axis-aligned box around every point. Throws on an empty cloud.
inline Aabb compute_bounds(const std::vector<PointObservation>& points) {
  PCSG_CHECK(!points.empty(), "cannot bound an empty cloud");
  Aabb b{points.front().position, points.front().position};
  for (const auto& p : points)
    for (int a = 0; a < 3; ++a) {
      b.min[a] = std::min(b.min[a], p.position[a]);
      b.max[a] = std::max(b.max[a], p.position[a]);
    }
  return b;
}

inline void refresh_bounds(LabeledPointCloud& cloud) {
  cloud.bounds = compute_bounds(cloud.points);
}

/// Checks the per-point invariants and that bounds contain every point.
inline void validate(const LabeledPointCloud& cloud) {
  PCSG_CHECK(cloud.label_count > 0, "label count must be positive");
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    for (double v : p.position)
      PCSG_CHECK(std::isfinite(v), "point ", i, ": non-finite position");
    if (p.color)
      for (double c : *p.color)
        PCSG_CHECK(c >= 0.0 && c <= 255.0, "point ", i, ": color outside [0,255]");
    if (p.label)
      PCSG_CHECK(*p.label >= 0 && *p.label < cloud.label_count, "point ", i,
                 ": label ", *p.label, " outside [0,", cloud.label_count, ")");
    PCSG_CHECK(cloud.bounds.contains(p.position), "point ", i, " lies outside bounds");
  }
}

enum class CloudFormat { kXyzRgbLabel, kXyzLabel };

inline CloudFormat parse_cloud_format(std::string_view tag) {
  if (tag == "xyzrgbl-ascii") return CloudFormat::kXyzRgbLabel;
  if (tag == "xyz-label-ascii") return CloudFormat::kXyzLabel;
  detail::fail("unknown cloud format '", tag, "'");
}

inline std::size_t column_count(CloudFormat f) {
  return f == CloudFormat::kXyzRgbLabel ? 7 : 4;
}

/// Parses a whitespace-separated ascii cloud. Label -1 marks an unlabeled
/// point. label_count <= 0 infers it as max label + 1.
inline LabeledPointCloud load_cloud(const std::string& path, CloudFormat format,
                                    int label_count = 0) {
  std::ifstream in(path);
  PCSG_CHECK(in.good(), "cannot open '", path, "'");
  LabeledPointCloud cloud;
  const std::size_t cols = column_count(format);
  std::string line;
  std::size_t line_no = 0;
  int max_label = -1;
  std::vector<double> v(cols);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::size_t got = 0;
    std::string tok;
    while (ls >> tok) {
      PCSG_CHECK(got < cols, path, ":", line_no, ": expected ", cols, " columns");
      char* end = nullptr;
      v[got] = std::strtod(tok.c_str(), &end);
      PCSG_CHECK(end && *end == '\0', path, ":", line_no, ": bad number '", tok, "'");
      ++got;
    }
    PCSG_CHECK(got == cols, path, ":", line_no, ": expected ", cols,
               " columns, got ", got);
    PointObservation p;
    for (int a = 0; a < 3; ++a) {
      PCSG_CHECK(std::isfinite(v[a]), path, ":", line_no, ": non-finite position");
      p.position[a] = v[a];
    }
    if (format == CloudFormat::kXyzRgbLabel) {
      Vec3 c{v[3], v[4], v[5]};
      for (double ch : c)
        PCSG_CHECK(std::isfinite(ch) && ch >= 0.0 && ch <= 255.0, path, ":",
                   line_no, ": color outside [0,255]");
      p.color = c;
    }
    const double lab = v[cols - 1];
    PCSG_CHECK(lab == std::floor(lab) && lab >= -1.0, path, ":", line_no,
               ": label must be an integer >= -1");
    if (lab >= 0.0) {
      p.label = static_cast<int>(lab);
      max_label = std::max(max_label, *p.label);
    }
    cloud.points.push_back(p);
  }
  PCSG_CHECK(!cloud.points.empty(), "'", path, "' contains no points");
  cloud.label_count = label_count > 0 ? label_count : std::max(1, max_label + 1);
  PCSG_CHECK(max_label < cloud.label_count, "'", path, "': label ", max_label,
             " exceeds label count ", cloud.label_count);
  refresh_bounds(cloud);
  return cloud;
}

namespace detail {

inline void append_number(std::string& out, const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  out += buf;
}

inline void write_ascii(const LabeledPointCloud& cloud, const std::vector<int>* labels,
                        const std::string& path, bool with_color) {
  std::ofstream os(path);
  PCSG_CHECK(os.good(), "cannot open '", path, "' for writing");
  std::string line;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    line.clear();
    for (int a = 0; a < 3; ++a) {
      if (a) line += ' ';
      append_number(line, "%.6f", p.position[a]);
    }
    if (with_color) {
      const Vec3 c = p.color.value_or(Vec3{0, 0, 0});
      for (double ch : c) {
        line += ' ';
        append_number(line, "%.6g", ch);
      }
    }
    const int lab = labels ? (*labels)[i] : p.label.value_or(-1);
    line += ' ';
    line += std::to_string(lab);
    line += '\n';
    os << line;
  }
  PCSG_CHECK(os.good(), "write to '", path, "' failed");
}

}  // namespace detail

/// Writes positions with 6 decimals (meters), colors, and the label column.
inline void save_cloud(const LabeledPointCloud& cloud, const std::string& path,
                       CloudFormat format) {
  PCSG_CHECK(format == CloudFormat::kXyzLabel || cloud.has_color(),
             "save_cloud: xyzrgbl-ascii needs a colored cloud");
  detail::write_ascii(cloud, nullptr, path, format == CloudFormat::kXyzRgbLabel);
}

/// Fixed per-class palette for exported predictions.
inline std::array<std::uint8_t, 3> palette_color(int label) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 12> kPalette = {{
      {174, 199, 232}, {152, 223, 138}, {31, 119, 180}, {255, 187, 120},
      {188, 189, 34},  {140, 86, 75},   {255, 152, 150}, {214, 39, 40},
      {197, 176, 213}, {148, 103, 189}, {196, 156, 148}, {23, 190, 207},
  }};
  if (label < 0) return {0, 0, 0};
  return kPalette[static_cast<std::size_t>(label) % kPalette.size()];
}

enum class PredictionFormat { kAscii, kPlyBinary };

inline PredictionFormat parse_prediction_format(std::string_view tag) {
  if (tag == "ascii") return PredictionFormat::kAscii;
  if (tag == "ply-binary") return PredictionFormat::kPlyBinary;
  detail::fail("unknown prediction format '", tag, "'");
}

/// ASCII: the cloud's own columns with the label column replaced by the
/// predicted labels (readable by load_cloud). PLY: binary little-endian
/// vertices {x,y,z: float32, red,green,blue: uint8} colored by palette.
inline void save_predictions(const LabeledPointCloud& cloud,
                             const std::vector<int>& labels,
                             const std::string& path, PredictionFormat format) {
  PCSG_CHECK(labels.size() == cloud.points.size(), "save_predictions: ",
             labels.size(), " labels for ", cloud.points.size(), " points");
  if (format == PredictionFormat::kAscii) {
    detail::write_ascii(cloud, &labels, path, cloud.has_color());
    return;
  }
  std::ofstream os(path, std::ios::binary);
  PCSG_CHECK(os.good(), "cannot open '", path, "' for writing");
  os << "ply\nformat binary_little_endian 1.0\n"
     << "element vertex " << cloud.points.size() << "\n"
     << "property float x\nproperty float y\nproperty float z\n"
     << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
     << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    unsigned char rec[15];
    for (int a = 0; a < 3; ++a) {
      const float f = static_cast<float>(cloud.points[i].position[a]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      for (int b = 0; b < 4; ++b)
        rec[a * 4 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
    }
    const auto c = palette_color(labels[i]);
    rec[12] = c[0];
    rec[13] = c[1];
    rec[14] = c[2];
    os.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
  PCSG_CHECK(os.good(), "write to '", path, "' failed");
}

/// One network-sized sub-area of a larger cloud.
struct Crop {
  LabeledPointCloud cloud;
  Vec3 origin{};                     // lower corner of the crop window
  std::vector<std::size_t> indices;  // source point index per crop point
};

/// Tiles the cloud into windows of crop_xy meters anchored at the bounds'
/// minimum corner with stride crop_xy - overlap. Along Z the cloud is kept
/// whole when keep_full_z, otherwise tiled the same way. Window k spans
/// (o_k, o_k + crop] (the first window is closed below), so with zero overlap
/// a point on a shared face goes to the lower-index window.
inline std::vector<Crop> crop_subareas(const LabeledPointCloud& cloud,
                                       double crop_xy = 5.0, double overlap = 0.0,
                                       bool keep_full_z = false) {
  PCSG_CHECK(!cloud.empty(), "crop_subareas: empty cloud");
  PCSG_CHECK(overlap >= 0.0 && crop_xy > overlap,
             "crop_subareas: need crop > overlap >= 0");
  const double stride = crop_xy - overlap;
  const Aabb& b = cloud.bounds;
  std::array<std::size_t, 3> counts{1, 1, 1};
  for (int a = 0; a < 3; ++a) {
    if (a == 2 && keep_full_z) continue;
    const double ext = b.max[a] - b.min[a];
    if (ext > crop_xy)
      counts[a] = static_cast<std::size_t>(std::ceil((ext - crop_xy) / stride - 1e-12)) + 1;
  }
  auto window_origin = [&](int a, std::size_t k) {
    return b.min[a] + static_cast<double>(k) * stride;
  };
  auto in_window = [&](int a, std::size_t k, double v) {
    if (a == 2 && keep_full_z) return true;
    const double lo = window_origin(a, k);
    const bool above = k == 0 ? v >= lo : v > lo;
    const bool last = k + 1 == counts[a];
    return above && (v <= lo + crop_xy || last);
  };

  std::vector<Crop> crops(counts[0] * counts[1] * counts[2]);
  for (std::size_t i = 0; i < counts[0]; ++i)
    for (std::size_t j = 0; j < counts[1]; ++j)
      for (std::size_t k = 0; k < counts[2]; ++k) {
        Crop& c = crops[(i * counts[1] + j) * counts[2] + k];
        c.origin = {window_origin(0, i), window_origin(1, j),
                    keep_full_z ? b.min[2] : window_origin(2, k)};
        c.cloud.label_count = cloud.label_count;
      }

  for (std::size_t p = 0; p < cloud.points.size(); ++p) {
    const Vec3& pos = cloud.points[p].position;
    // Candidate windows per axis are contiguous; scan from the first one.
    std::array<std::pair<std::size_t, std::size_t>, 3> range{};
    for (int a = 0; a < 3; ++a) {
      std::size_t lo = counts[a], hi = 0;
      for (std::size_t k = 0; k < counts[a]; ++k)
        if (in_window(a, k, pos[a])) {
          lo = std::min(lo, k);
          hi = std::max(hi, k);
        }
      range[a] = {lo, hi};
    }
    for (std::size_t i = range[0].first; i <= range[0].second && i < counts[0]; ++i)
      for (std::size_t j = range[1].first; j <= range[1].second && j < counts[1]; ++j)
        for (std::size_t k = range[2].first; k <= range[2].second && k < counts[2]; ++k) {
          Crop& c = crops[(i * counts[1] + j) * counts[2] + k];
          c.cloud.points.push_back(cloud.points[p]);
          c.indices.push_back(p);
        }
  }

  std::erase_if(crops, [](const Crop& c) { return c.cloud.points.empty(); });
  for (Crop& c : crops) refresh_bounds(c.cloud);
  return crops;
}

}  // namespace pcseg
