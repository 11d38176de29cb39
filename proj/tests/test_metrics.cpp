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

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>
#include <numeric>
#include <random>

#include "pcseg/metrics.hpp"

namespace pcseg {
namespace {

using Q = boost::rational<long long>;

TEST(Scores, TwoByTwoExactValues) {
  const ConfusionMatrix cm(2, {3, 1, 2, 4});
  const Scores<Q> s = scores<Q>(cm);
  EXPECT_EQ(*s.acc[0], Q(3, 4));
  EXPECT_EQ(*s.acc[1], Q(4, 6));
  EXPECT_EQ(*s.iou[0], Q(3, 6));
  EXPECT_EQ(*s.iou[1], Q(4, 7));
  EXPECT_EQ(s.mean_acc, Q(17, 24));
  EXPECT_EQ(s.mean_iou, Q(15, 28));
  EXPECT_EQ(s.global_acc, Q(7, 10));
  const Scores<double> d = scores(cm);
  EXPECT_DOUBLE_EQ(d.mean_iou, 15.0 / 28.0);
}

TEST(Scores, DiagonalIsPerfect) {
  const ConfusionMatrix cm(3, {5, 0, 0, 0, 2, 0, 0, 0, 9});
  const Scores<Q> s = scores<Q>(cm);
  EXPECT_EQ(s.mean_acc, Q(1));
  EXPECT_EQ(s.mean_iou, Q(1));
  EXPECT_EQ(s.global_acc, Q(1));
}

TEST(Scores, SingleClass) {
  const ConfusionMatrix cm(1, {7});
  const Scores<Q> s = scores<Q>(cm);
  EXPECT_EQ(s.mean_iou, Q(1));
  EXPECT_EQ(s.mean_acc, Q(1));
}

TEST(Scores, ThreePointExample) {
  ConfusionMatrix cm(2);
  const std::vector<int> gt = {0, 0, 1}, pred = {0, 1, 1};
  cm.accumulate(gt, pred);
  const Scores<Q> s = scores<Q>(cm);
  EXPECT_EQ(*s.iou[0], Q(1, 2));
  EXPECT_EQ(*s.iou[1], Q(1, 2));
  EXPECT_EQ(s.mean_iou, Q(1, 2));
  EXPECT_EQ(s.mean_acc, Q(3, 4));
  EXPECT_EQ(s.global_acc, Q(2, 3));
}

TEST(Scores, AbsentClassesAreExcluded) {
  // Class 2 never appears; class 1 is predicted but absent from the truth.
  const ConfusionMatrix cm(3, {4, 1, 0, 0, 0, 0, 0, 0, 0});
  const Scores<Q> s = scores<Q>(cm);
  EXPECT_FALSE(s.acc[1].has_value());
  EXPECT_FALSE(s.acc[2].has_value());
  EXPECT_FALSE(s.iou[2].has_value());
  ASSERT_TRUE(s.iou[1].has_value());
  EXPECT_EQ(*s.iou[1], Q(0));
  EXPECT_EQ(s.mean_acc, Q(4, 5));
  EXPECT_EQ(s.mean_iou, Q(2, 5));
}

std::vector<int> random_labels(std::size_t n, int nl, std::mt19937_64& rng, bool unlabeled) {
  std::uniform_int_distribution<int> d(unlabeled ? -1 : 0, nl - 1);
  std::vector<int> out(n);
  for (int& v : out) v = d(rng);
  return out;
}

TEST(ConfusionMatrix, OrderInvariantAndAdditive) {
  std::mt19937_64 rng(1);
  const std::vector<int> gt = random_labels(500, 4, rng, true), pred = random_labels(500, 4, rng, false);
  ConfusionMatrix whole(4);
  whole.accumulate(gt, pred);

  std::vector<std::size_t> order(500);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> gs, ps;
  for (std::size_t i : order) {
    gs.push_back(gt[i]);
    ps.push_back(pred[i]);
  }
  ConfusionMatrix shuffled(4);
  shuffled.accumulate(gs, ps);
  EXPECT_EQ(whole, shuffled);

  ConfusionMatrix a(4), b(4);
  a.accumulate(std::span(gt).first(200), std::span(pred).first(200));
  b.accumulate(std::span(gt).subspan(200), std::span(pred).subspan(200));
  a += b;
  EXPECT_EQ(a, whole);
  std::uint64_t labeled = 0;
  for (int y : gt) labeled += y >= 0;
  EXPECT_EQ(whole.total(), labeled);
}

TEST(Scores, InvariantUnderClassRelabeling) {
  std::mt19937_64 rng(2);
  const std::vector<int> gt = random_labels(300, 5, rng, false), pred = random_labels(300, 5, rng, false);
  std::vector<int> perm = {3, 0, 4, 1, 2};
  std::vector<int> gp(gt.size()), pp(pred.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gp[i] = perm[gt[i]];
    pp[i] = perm[pred[i]];
  }
  ConfusionMatrix a(5), b(5);
  a.accumulate(gt, pred);
  b.accumulate(gp, pp);
  const Scores<Q> sa = scores<Q>(a), sb = scores<Q>(b);
  EXPECT_EQ(sa.mean_iou, sb.mean_iou);
  EXPECT_EQ(sa.mean_acc, sb.mean_acc);
  EXPECT_EQ(sa.global_acc, sb.global_acc);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(*sa.iou[c], *sb.iou[perm[c]]);
}

TEST(Scores, MeanIouNeverExceedsMeanAccuracy) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(0, 20), size(2, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t nl = static_cast<std::size_t>(size(rng));
    std::vector<std::uint64_t> counts(nl * nl);
    for (auto& c : counts) c = static_cast<std::uint64_t>(count(rng));
    // Keep every class present in the ground truth so both means cover the same classes.
    for (std::size_t c = 0; c < nl; ++c) counts[c * nl + c] += 1;
    // Sums of many fractions overflow 64-bit rationals.
    using Big = boost::multiprecision::cpp_rational;
    const Scores<Big> s = scores<Big>(ConfusionMatrix(nl, counts));
    EXPECT_LE(s.mean_iou, s.mean_acc);
    for (std::size_t c = 0; c < nl; ++c) EXPECT_LE(*s.iou[c], *s.acc[c]);
  }
}

TEST(ConfusionMatrix, Errors) {
  EXPECT_THROW(ConfusionMatrix(0), Error);
  EXPECT_THROW(ConfusionMatrix(2, {1, 2, 3}), Error);
  ConfusionMatrix cm(2);
  EXPECT_THROW(cm.accumulate(std::vector<int>{0}, std::vector<int>{0, 1}), Error);
  EXPECT_THROW(cm.accumulate(std::vector<int>{2}, std::vector<int>{0}), Error);
  EXPECT_THROW(cm.accumulate(std::vector<int>{0}, std::vector<int>{-1}), Error);
  EXPECT_THROW(scores(cm), Error);
  cm.accumulate(std::vector<int>{-1}, std::vector<int>{1});
  EXPECT_EQ(cm.total(), 0u);
  ConfusionMatrix other(3);
  EXPECT_THROW(cm += other, Error);
}

TEST(Report, CsvAndTable) {
  const Scores<double> s = scores(ConfusionMatrix(3, {3, 1, 0, 2, 4, 0, 0, 0, 0}));
  const std::string csv = report_csv(s, {"floor", "wall"});
  EXPECT_EQ(csv,
            "class,acc,iou\n"
            "floor,0.750000,0.500000\n"
            "wall,0.666667,0.571429\n"
            "class2,,\n"
            "mean,0.708333,0.535714\n"
            "global,0.700000,\n");
  const std::string table = report_table(s, {"floor", "wall", "ceiling"});
  EXPECT_NE(table.find("ceiling         -         -"), std::string::npos) << table;
  EXPECT_NE(table.find("mean       0.7083    0.5357"), std::string::npos) << table;
}

}  // namespace
}  // namespace pcseg
