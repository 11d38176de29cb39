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
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcseg/error.hpp"

namespace pcseg {

/// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t label_count)
      : label_count_(label_count), counts_(label_count * label_count, 0) {
    PCSG_CHECK(label_count >= 1, "confusion matrix needs at least one label");
  }

  /// Row-major counts; throws unless counts.size() == L * L.
  ConfusionMatrix(std::size_t label_count, std::vector<std::uint64_t> counts)
      : label_count_(label_count), counts_(std::move(counts)) {
    PCSG_CHECK(label_count >= 1 && counts_.size() == label_count * label_count,
               "confusion matrix: expected ", label_count * label_count, " counts, got ",
               counts_.size());
  }

  std::size_t label_count() const { return label_count_; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const {
    return counts_.at(gt * label_count_ + pred);
  }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts_) t += c;
    return t;
  }

  /// Adds one count per point; ground truth -1 marks an unlabeled point.
  void accumulate(std::span<const int> gt, std::span<const int> pred) {
    PCSG_CHECK(gt.size() == pred.size(), "accumulate: ", gt.size(), " ground-truth labels vs ",
               pred.size(), " predictions");
    const long nl = static_cast<long>(label_count_);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] == -1) continue;
      PCSG_CHECK(gt[i] >= 0 && gt[i] < nl, "accumulate: ground truth ", gt[i], " at ", i,
                 " outside [0, ", nl, ")");
      PCSG_CHECK(pred[i] >= 0 && pred[i] < nl, "accumulate: prediction ", pred[i], " at ", i,
                 " outside [0, ", nl, ")");
      ++counts_[static_cast<std::size_t>(gt[i]) * label_count_ + static_cast<std::size_t>(pred[i])];
    }
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    PCSG_CHECK(other.label_count_ == label_count_, "confusion matrices differ in label count");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t label_count_ = 0;
  std::vector<std::uint64_t> counts_;
};

/// Per-class and mean scores. acc[c] is empty when class c has no ground
/// truth; iou[c] is empty when it has neither ground truth nor predictions.
/// Means average the defined entries, so a class predicted but absent from
/// the ground truth counts as IOU 0 and is left out of mAcc.
template <typename T>
struct Scores {
  std::vector<std::optional<T>> acc;
  std::vector<std::optional<T>> iou;
  T mean_acc{};
  T mean_iou{};
  T global_acc{};
};

template <typename T = double>
Scores<T> scores(const ConfusionMatrix& cm) {
  const std::size_t nl = cm.label_count();
  const std::uint64_t total = cm.total();
  PCSG_CHECK(total > 0, "scores: confusion matrix is empty");
  Scores<T> s;
  s.acc.resize(nl);
  s.iou.resize(nl);
  std::uint64_t trace = 0;
  T acc_sum{}, iou_sum{};
  std::size_t acc_n = 0, iou_n = 0;
  for (std::size_t c = 0; c < nl; ++c) {
    std::uint64_t gt = 0, pred = 0;
    for (std::size_t k = 0; k < nl; ++k) {
      gt += cm.at(c, k);
      pred += cm.at(k, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    trace += tp;
    const std::uint64_t fn = gt - tp, fp = pred - tp;
    if (gt > 0) {
      s.acc[c] = T(static_cast<long long>(tp)) / T(static_cast<long long>(tp + fn));
      acc_sum += *s.acc[c];
      ++acc_n;
    }
    if (gt > 0 || pred > 0) {
      s.iou[c] = T(static_cast<long long>(tp)) / T(static_cast<long long>(tp + fn + fp));
      iou_sum += *s.iou[c];
      ++iou_n;
    }
  }
  // total > 0 guarantees at least one class with ground truth.
  s.mean_acc = acc_sum / T(static_cast<long long>(acc_n));
  s.mean_iou = iou_sum / T(static_cast<long long>(iou_n));
  s.global_acc = T(static_cast<long long>(trace)) / T(static_cast<long long>(total));
  return s;
}

namespace detail {

inline std::string class_name(const std::vector<std::string>& names, std::size_t c) {
  return c < names.size() ? names[c] : "class" + std::to_string(c);
}

inline std::string format_score(const std::optional<double>& v, const char* fmt = "%.4f") {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

}  // namespace detail

/// class,acc,iou rows followed by mean and global rows. Undefined scores are
/// left blank.
inline std::string report_csv(const Scores<double>& s, const std::vector<std::string>& names = {}) {
  std::string out = "class,acc,iou\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? detail::format_score(v, "%.6f") : std::string();
  };
  for (std::size_t c = 0; c < s.acc.size(); ++c)
    out += detail::class_name(names, c) + "," + cell(s.acc[c]) + "," + cell(s.iou[c]) + "\n";
  out += "mean," + cell(s.mean_acc) + "," + cell(s.mean_iou) + "\n";
  out += "global," + cell(s.global_acc) + ",\n";
  return out;
}

/// Aligned plain-text table: one row per class, then a summary.
inline std::string report_table(const Scores<double>& s, const std::vector<std::string>& names = {}) {
  std::size_t width = 7;
  for (std::size_t c = 0; c < s.acc.size(); ++c)
    width = std::max(width, detail::class_name(names, c).size());
  char buf[256];
  std::string out;
  auto row = [&](const std::string& a, const std::string& b, const std::string& c) {
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s\n", static_cast<int>(width), a.c_str(),
                  b.c_str(), c.c_str());
    out += buf;
  };
  row("class", "acc", "IOU");
  out += std::string(width + 20, '-') + "\n";
  for (std::size_t c = 0; c < s.acc.size(); ++c)
    row(detail::class_name(names, c), detail::format_score(s.acc[c]), detail::format_score(s.iou[c]));
  out += std::string(width + 20, '-') + "\n";
  row("mean", detail::format_score(s.mean_acc), detail::format_score(s.mean_iou));
  row("global", detail::format_score(s.global_acc), "");
  return out;
}

}  // namespace pcseg
