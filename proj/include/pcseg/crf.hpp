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

// Fully connected CRF over points with Gaussian edge potentials, inferred by
// unrolled mean-field iterations that can be differentiated end to end.
//
// Conventions: unaries psi are (N, L) with psi = -logit, so that with no
// pairwise coupling the marginals are softmax(logit). Kernels exclude the
// self pair.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcseg/cloud.hpp"
#include "pcseg/error.hpp"
#include "pcseg/ops.hpp"
#include "pcseg/permutohedral.hpp"
#include "pcseg/tensor.hpp"

namespace pcseg {

inline constexpr std::size_t kBruteForceLimit = 5000;
inline constexpr int kTrainCrfIterations = 5;
inline constexpr int kTestCrfIterations = 10;

/// Learnable: w_spatial, w_bilateral, compat. The bandwidths stay fixed.
struct CrfParams {
  double w_spatial = 3.0;
  double w_bilateral = 5.0;
  Tensor compat;               // (L, L)
  double theta_alpha = 0.8;    // meters, bilateral position bandwidth
  double theta_beta = 11.0;    // color units on the 0..255 scale
  double theta_gamma = 0.05;   // meters, spatial bandwidth
  // Divide each point's message by 1 + its total kernel mass, so messages
  // are local averages of Q. Off gives the raw kernel sums.
  bool normalize = true;

  /// Potts compatibility: 1 off the diagonal, 0 on it.
  static CrfParams potts(std::size_t label_count) {
    CrfParams p;
    p.compat = Tensor({label_count, label_count}, 1.0);
    for (std::size_t l = 0; l < label_count; ++l) p.compat.at(l, l) = 0.0;
    return p;
  }

  std::size_t label_count() const { return compat.rank() == 2 ? compat.dim(0) : 0; }

  void validate() const {
    PCSG_CHECK(compat.rank() == 2 && compat.dim(0) == compat.dim(1) && compat.dim(0) >= 2,
               "crf: compatibility must be an (L, L) matrix with L >= 2, got ",
               shape_string(compat.shape()));
    PCSG_CHECK(compat.all_finite(), "crf: compatibility has non-finite entries");
    PCSG_CHECK(std::isfinite(w_spatial) && std::isfinite(w_bilateral),
               "crf: kernel weights must be finite");
    PCSG_CHECK(theta_alpha > 0.0 && theta_beta > 0.0 && theta_gamma > 0.0,
               "crf: bandwidths must be positive");
  }
};

enum class FilterBackend { kBruteForce, kPermutohedral };

inline FilterBackend parse_backend(std::string_view name) {
  if (name == "bruteforce") return FilterBackend::kBruteForce;
  if (name == "lattice" || name == "permutohedral") return FilterBackend::kPermutohedral;
  detail::fail("unknown filter backend '", name, "' (expected bruteforce or lattice)");
}

inline std::string_view backend_name(FilterBackend b) {
  return b == FilterBackend::kBruteForce ? "bruteforce" : "lattice";
}

/// (N, 3) positions divided by theta_gamma.
inline Tensor spatial_features(std::span<const Vec3> positions, double theta_gamma) {
  Tensor f({positions.size(), 3});
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t a = 0; a < 3; ++a) f[i * 3 + a] = positions[i][a] / theta_gamma;
  return f;
}

/// (N, 6): positions / theta_alpha then colors / theta_beta.
inline Tensor bilateral_features(std::span<const Vec3> positions, std::span<const Vec3> colors,
                                 double theta_alpha, double theta_beta) {
  PCSG_CHECK(colors.size() == positions.size(), "bilateral_features: ", colors.size(),
             " colors for ", positions.size(), " points");
  Tensor f({positions.size(), 6});
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t a = 0; a < 3; ++a) {
      f[i * 6 + a] = positions[i][a] / theta_alpha;
      f[i * 6 + 3 + a] = colors[i][a] / theta_beta;
    }
  return f;
}

/// out_i = sum_{j != i} exp(-|f_i - f_j|^2 / 2) v_j for (N, C) values and
/// (N, d) features. The lattice backend approximates the sum in linear time:
/// it blurs on the lattice, removes the lattice's own self weight, and applies
/// one scale fitted by least squares to the exact kernel row sums of a fixed
/// sample of points. The scale depends only on the features, so the filter
/// stays linear and apply_transpose() stays its exact adjoint.
class GaussianFilter {
 public:
  GaussianFilter(Tensor features, FilterBackend backend)
      : features_(std::move(features)), backend_(backend) {
    PCSG_CHECK(features_.rank() == 2 && features_.dim(1) >= 1,
               "gaussian_filter: features must be (N, d), got ", shape_string(features_.shape()));
    PCSG_CHECK(features_.all_finite(), "gaussian_filter: non-finite features");
    if (backend_ == FilterBackend::kBruteForce) {
      PCSG_CHECK(point_count() <= kBruteForceLimit, "gaussian_filter: bruteforce backend is limited to ",
                 kBruteForceLimit, " points, got ", point_count());
    } else if (point_count() > 0) {
      lattice_ = std::make_shared<PermutohedralLattice>(features_.span(), point_count(),
                                                        feature_dim());
      calibrate();
    }
  }

  static constexpr std::size_t kCalibrationRows = 128;

  std::size_t point_count() const { return features_.dim(0); }
  std::size_t feature_dim() const { return features_.dim(1); }
  FilterBackend backend() const { return backend_; }
  double lattice_scale() const { return scale_; }

  Tensor apply(const Tensor& values) const { return run(values, false); }

  /// Transpose of apply(). The exact kernel is symmetric; the lattice blur
  /// runs its directions in reverse.
  Tensor apply_transpose(const Tensor& values) const { return run(values, true); }

 private:
  double exact_row_sum(std::size_t i) const {
    const std::size_t n = point_count(), d = feature_dim();
    const double* f = features_.data();
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double t = f[i * d + k] - f[j * d + k];
        r2 += t * t;
      }
      z += std::exp(-0.5 * r2);
    }
    return z;
  }

  // Rows are evenly spaced indices, so the fit is deterministic.
  void calibrate() {
    const std::size_t n = point_count();
    const Tensor lat = run(Tensor({n, 1}, 1.0), false);
    const std::size_t rows = std::min(n, kCalibrationRows);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
      const std::size_t i = k * n / rows;
      sxy += lat[i] * exact_row_sum(i);
      sxx += lat[i] * lat[i];
    }
    if (sxx > 0.0) scale_ = sxy / sxx;
  }

  Tensor run(const Tensor& values, bool transpose) const {
    PCSG_CHECK(values.rank() == 2 && values.dim(0) == point_count(),
               "gaussian_filter: values must be (", point_count(), ", C), got ",
               shape_string(values.shape()));
    const std::size_t n = point_count(), c = values.dim(1), d = feature_dim();
    Tensor out(values.shape());
    if (n == 0) return out;
    if (backend_ == FilterBackend::kBruteForce) {
      const double* f = features_.data();
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < n; ++i) {
        double* o = out.data() + i * c;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          double r2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double t = f[i * d + k] - f[j * d + k];
            r2 += t * t;
          }
          const double w = std::exp(-0.5 * r2);
          const double* v = values.data() + j * c;
          for (std::size_t l = 0; l < c; ++l) o[l] += w * v[l];
        }
      }
      return out;
    }
    lattice_->compute(values.span(), out.span(), c, transpose);
    const std::vector<double>& self = lattice_->self_weights();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < c; ++l)
        out[i * c + l] = scale_ * (out[i * c + l] - self[i] * values[i * c + l]);
    return out;
  }

  Tensor features_;
  FilterBackend backend_;
  double scale_ = 1.0;
  std::shared_ptr<const PermutohedralLattice> lattice_;
};

inline Tensor gaussian_filter(const Tensor& values, const Tensor& features, FilterBackend backend) {
  return GaussianFilter(features, backend).apply(values);
}

/// The spatial filter plus, when colors are present, the bilateral one.
/// With params.normalize each message row is scaled by
/// n_i = 1 / (1 + max(sum_j k(i, j), 0)), fixed by the features, so the
/// message stays linear in Q and its transpose is K^T diag(n).
class CrfFilters {
 public:
  CrfFilters(std::span<const Vec3> positions, std::span<const Vec3> colors,
             const CrfParams& params, FilterBackend backend)
      : spatial_(spatial_features(positions, params.theta_gamma), backend) {
    if (!colors.empty())
      bilateral_.emplace(bilateral_features(positions, colors, params.theta_alpha,
                                            params.theta_beta),
                         backend);
    if (params.normalize) {
      spatial_norm_ = row_norms(spatial_);
      if (bilateral_) bilateral_norm_ = row_norms(*bilateral_);
    }
  }

  static CrfFilters from_cloud(const LabeledPointCloud& cloud, const CrfParams& params,
                               FilterBackend backend) {
    std::vector<Vec3> positions(cloud.size()), colors;
    for (std::size_t i = 0; i < cloud.size(); ++i) positions[i] = cloud.points[i].position;
    if (cloud.has_color()) {
      colors.resize(cloud.size());
      for (std::size_t i = 0; i < cloud.size(); ++i) colors[i] = *cloud.points[i].color;
    }
    return CrfFilters(positions, colors, params, backend);
  }

  std::size_t point_count() const { return spatial_.point_count(); }
  bool normalized() const { return !spatial_norm_.empty(); }
  bool has_bilateral() const { return bilateral_.has_value(); }
  const GaussianFilter& spatial() const { return spatial_; }
  const GaussianFilter* bilateral() const { return bilateral_ ? &*bilateral_ : nullptr; }

  Tensor spatial_message(const Tensor& q) const { return message(spatial_, spatial_norm_, q); }
  Tensor spatial_message_transpose(const Tensor& g) const {
    return message_transpose(spatial_, spatial_norm_, g);
  }
  Tensor bilateral_message(const Tensor& q) const {
    PCSG_CHECK(bilateral_, "crf: no bilateral kernel without colors");
    return message(*bilateral_, bilateral_norm_, q);
  }
  Tensor bilateral_message_transpose(const Tensor& g) const {
    PCSG_CHECK(bilateral_, "crf: no bilateral kernel without colors");
    return message_transpose(*bilateral_, bilateral_norm_, g);
  }

 private:
  static std::vector<double> row_norms(const GaussianFilter& f) {
    const Tensor mass = f.apply(Tensor({f.point_count(), 1}, 1.0));
    std::vector<double> n(f.point_count());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = 1.0 / (1.0 + std::max(mass[i], 0.0));
    return n;
  }

  static void scale_rows(Tensor& t, const std::vector<double>& norm) {
    const std::size_t c = t.dim(1);
    for (std::size_t i = 0; i < norm.size(); ++i)
      for (std::size_t l = 0; l < c; ++l) t[i * c + l] *= norm[i];
  }

  static Tensor message(const GaussianFilter& f, const std::vector<double>& norm, const Tensor& q) {
    Tensor m = f.apply(q);
    if (!norm.empty()) scale_rows(m, norm);
    return m;
  }

  static Tensor message_transpose(const GaussianFilter& f, const std::vector<double>& norm,
                                  const Tensor& g) {
    if (norm.empty()) return f.apply_transpose(g);
    Tensor scaled = g;
    scale_rows(scaled, norm);
    return f.apply_transpose(scaled);
  }

  GaussianFilter spatial_;
  std::optional<GaussianFilter> bilateral_;
  std::vector<double> spatial_norm_;
  std::vector<double> bilateral_norm_;
};

namespace detail {

inline void check_unaries(const Tensor& unaries, const CrfParams& params, std::size_t n) {
  params.validate();
  PCSG_CHECK(unaries.rank() == 2 && unaries.dim(0) == n &&
                 unaries.dim(1) == params.label_count(),
             "crf: unaries must be (", n, ", ", params.label_count(), "), got ",
             shape_string(unaries.shape()));
}

inline Tensor negated(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = -t[i];
  return out;
}

/// C[i, l] = sum_l' compat(l, l') P[i, l'].
inline Tensor compatibility_transform(const Tensor& compat, const Tensor& p) {
  const std::size_t n = p.dim(0), labels = p.dim(1);
  Tensor c(p.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < labels; ++l) {
      double s = 0.0;
      for (std::size_t k = 0; k < labels; ++k) s += compat[l * labels + k] * p[i * labels + k];
      c[i * labels + l] = s;
    }
  return c;
}

}  // namespace detail

/// Intermediates of one mean-field update, kept for the backward pass.
struct MeanFieldStep {
  Tensor spatial_msg;    // spatial message (K_s Q, row-normalized when enabled)
  Tensor bilateral_msg;  // bilateral message, empty without colors
  Tensor pairwise;       // w_s K_s Q + w_b K_b Q
  Tensor q;              // updated marginals
};

inline MeanFieldStep meanfield_step_traced(const Tensor& q, const Tensor& unaries,
                                           const CrfParams& params, const CrfFilters& filters) {
  detail::check_unaries(unaries, params, filters.point_count());
  PCSG_CHECK(q.shape() == unaries.shape(), "meanfield_step: Q must match the unaries' shape");
  MeanFieldStep s;
  PCSG_CHECK(filters.normalized() == params.normalize,
             "meanfield_step: filters were built for a different normalization");
  s.spatial_msg = filters.spatial_message(q);
  s.pairwise = s.spatial_msg;
  s.pairwise *= params.w_spatial;
  if (filters.has_bilateral()) {
    s.bilateral_msg = filters.bilateral_message(q);
    Tensor weighted = s.bilateral_msg;
    weighted *= params.w_bilateral;
    s.pairwise += weighted;
  }
  Tensor a = detail::compatibility_transform(params.compat, s.pairwise);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -unaries[i] - a[i];
  s.q = ops::softmax_rows(a);
  return s;
}

/// Q+_i(l) proportional to exp(-psi_i(l) - sum_l' compat(l, l') sum_m w_m (K_m Q)_i(l')),
/// with each K_m Q row scaled by its norm when params.normalize.
inline Tensor meanfield_step(const Tensor& q, const Tensor& unaries, const CrfParams& params,
                             const CrfFilters& filters) {
  return meanfield_step_traced(q, unaries, params, filters).q;
}

struct CrfTrace {
  Tensor unaries;
  Tensor q0;                        // softmax(-psi)
  std::vector<MeanFieldStep> steps;

  const Tensor& output() const { return steps.empty() ? q0 : steps.back().q; }
};

inline CrfTrace crf_forward(const Tensor& unaries, const CrfParams& params,
                            const CrfFilters& filters, int iterations) {
  PCSG_CHECK(iterations >= 1, "crf_forward: iterations must be >= 1, got ", iterations);
  detail::check_unaries(unaries, params, filters.point_count());
  CrfTrace t;
  t.unaries = unaries;
  t.q0 = ops::softmax_rows(detail::negated(unaries));
  t.steps.reserve(static_cast<std::size_t>(iterations));
  for (int it = 0; it < iterations; ++it)
    t.steps.push_back(meanfield_step_traced(t.output(), unaries, params, filters));
  return t;
}

struct CrfGrads {
  Tensor unaries;
  double w_spatial = 0.0;
  double w_bilateral = 0.0;
  Tensor compat;
};

inline CrfGrads crf_backward(const CrfTrace& trace, const CrfParams& params,
                             const CrfFilters& filters, const Tensor& grad_q) {
  PCSG_CHECK(grad_q.shape() == trace.unaries.shape(), "crf_backward: gradient shape ",
             shape_string(grad_q.shape()), " does not match ", shape_string(trace.unaries.shape()));
  const std::size_t labels = params.label_count();
  const std::size_t n = trace.unaries.dim(0);
  CrfGrads g;
  g.unaries = Tensor(trace.unaries.shape());
  g.compat = Tensor({labels, labels});
  Tensor dq = grad_q;
  for (std::size_t t = trace.steps.size(); t-- > 0;) {
    const MeanFieldStep& s = trace.steps[t];
    const Tensor da = ops::softmax_rows_backward(s.q, dq);
    // a = -psi - C
    Tensor dp({n, labels});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < labels; ++l) {
        const double dc = -da[i * labels + l];
        g.unaries[i * labels + l] -= da[i * labels + l];
        for (std::size_t k = 0; k < labels; ++k) {
          g.compat[l * labels + k] += dc * s.pairwise[i * labels + k];
          dp[i * labels + k] += dc * params.compat[l * labels + k];
        }
      }
    g.w_spatial += dot(dp, s.spatial_msg);
    Tensor dm = dp;
    dm *= params.w_spatial;
    dq = filters.spatial_message_transpose(dm);
    if (filters.has_bilateral()) {
      g.w_bilateral += dot(dp, s.bilateral_msg);
      dm = dp;
      dm *= params.w_bilateral;
      dq += filters.bilateral_message_transpose(dm);
    }
  }
  const Tensor dq0 = ops::softmax_rows_backward(trace.q0, dq);
  for (std::size_t i = 0; i < dq0.size(); ++i) g.unaries[i] -= dq0[i];
  return g;
}

/// E(x) = sum_i psi_i(x_i) + sum_{i<j} compat(x_i, x_j) (w_s k_s(i, j) + w_b k_b(i, j)).
/// The bilateral term is dropped when colors are empty. Raw kernels: the
/// normalization only affects inference. O(N^2).
inline double energy(std::span<const int> labels, const Tensor& unaries, const CrfParams& params,
                     std::span<const Vec3> positions, std::span<const Vec3> colors) {
  const std::size_t n = positions.size();
  PCSG_CHECK(n <= kBruteForceLimit, "energy: limited to ", kBruteForceLimit, " points, got ", n);
  PCSG_CHECK(labels.size() == n, "energy: ", labels.size(), " labels for ", n, " points");
  PCSG_CHECK(colors.empty() || colors.size() == n, "energy: color count mismatch");
  detail::check_unaries(unaries, params, n);
  const std::size_t nl = params.label_count();
  for (std::size_t i = 0; i < n; ++i)
    PCSG_CHECK(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < nl, "energy: label ",
               labels[i], " at point ", i, " out of range");
  const Tensor fs = spatial_features(positions, params.theta_gamma);
  const Tensor fb = colors.empty()
                        ? Tensor()
                        : bilateral_features(positions, colors, params.theta_alpha, params.theta_beta);
  auto kernel = [](const Tensor& f, std::size_t i, std::size_t j) {
    const std::size_t d = f.dim(1);
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double t = f[i * d + k] - f[j * d + k];
      r2 += t * t;
    }
    return std::exp(-0.5 * r2);
  };
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) e += unaries[i * nl + static_cast<std::size_t>(labels[i])];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double mu = params.compat[static_cast<std::size_t>(labels[i]) * nl +
                                      static_cast<std::size_t>(labels[j])];
      if (mu == 0.0) continue;
      double k = params.w_spatial * kernel(fs, i, j);
      if (!colors.empty()) k += params.w_bilateral * kernel(fb, i, j);
      e += mu * k;
    }
  return e;
}

}  // namespace pcseg
