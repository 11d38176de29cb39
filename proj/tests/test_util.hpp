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

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "pcseg/pcseg.hpp"

namespace pcseg::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = u(rng);
  return t;
}

/// Random colored, labeled cloud in the box [lo, hi]^3.
inline LabeledPointCloud random_cloud(std::size_t n, std::mt19937_64& rng, Vec3 lo = {0, 0, 0},
                                      Vec3 hi = {1, 1, 1}, int labels = 3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, labels - 1);
  LabeledPointCloud c;
  c.label_count = labels;
  for (std::size_t i = 0; i < n; ++i) {
    PointObservation p;
    for (int a = 0; a < 3; ++a) p.position[a] = lo[a] + (hi[a] - lo[a]) * u(rng);
    p.color = Vec3{255.0 * u(rng), 255.0 * u(rng), 255.0 * u(rng)};
    p.label = lab(rng);
    c.points.push_back(p);
  }
  refresh_bounds(c);
  return c;
}

/// Central difference of f at x[i] with step h; x is restored afterwards.
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double keep = x;
  x = keep + h;
  const double fp = f();
  x = keep - h;
  const double fm = f();
  x = keep;
  return (fp - fm) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor): relative error that tolerates tiny values.
inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Largest relative error between an analytic gradient and central finite
/// differences of scalar f wrt every entry of x.
inline double max_gradient_error(const std::function<double()>& f, Tensor& x,
                                 const Tensor& analytic, double h = 1e-5,
                                 double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = central_difference(f, x[i], h);
    worst = std::max(worst, rel_error(analytic[i], fd, floor));
  }
  return worst;
}

}  // namespace pcseg::testing
