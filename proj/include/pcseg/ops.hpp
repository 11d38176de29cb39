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

// Forward/backward kernels for the operators the voxel network uses.
// Volumes are (C, X, Y, Z) row-major. Every kernel writes each output site
// from exactly one loop iteration of its outermost parallel loop, so results
// do not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pcseg/error.hpp"
#include "pcseg/tensor.hpp"

namespace pcseg::ops {

struct ConvGeometry {
  std::size_t in_channels, out_channels, kernel;
  std::size_t x, y, z;     // input extent
  std::size_t ox, oy, oz;  // output extent
  std::size_t stride, pad;
};

inline std::size_t conv_out_extent(std::size_t n, std::size_t k,
                                   std::size_t stride, std::size_t pad) {
  PCSG_CHECK(n + 2 * pad >= k, "conv3d: kernel larger than padded input");
  return (n + 2 * pad - k) / stride + 1;
}

inline ConvGeometry conv_geometry(const Tensor& input, const Tensor& weights,
                                  std::size_t stride, std::size_t pad) {
  PCSG_CHECK(input.rank() == 4, "conv3d: input must be (C,X,Y,Z), got ",
             shape_string(input.shape()));
  PCSG_CHECK(weights.rank() == 5, "conv3d: weights must be (Co,Ci,k,k,k)");
  const std::size_t k = weights.dim(2);
  PCSG_CHECK(weights.dim(3) == k && weights.dim(4) == k, "conv3d: cubic kernels only");
  PCSG_CHECK(k % 2 == 1, "conv3d: kernel size must be odd");
  PCSG_CHECK(stride == 1 || stride == 2, "conv3d: stride must be 1 or 2");
  PCSG_CHECK(weights.dim(1) == input.dim(0), "conv3d: weights expect ",
             weights.dim(1), " input channels, got ", input.dim(0));
  ConvGeometry g{input.dim(0), weights.dim(0), k,
                 input.dim(1), input.dim(2), input.dim(3),
                 0, 0, 0, stride, pad};
  g.ox = conv_out_extent(g.x, k, stride, pad);
  g.oy = conv_out_extent(g.y, k, stride, pad);
  g.oz = conv_out_extent(g.z, k, stride, pad);
  return g;
}

namespace detail {

// Range of output indices o with 0 <= o*stride + tap - pad < n.
inline void valid_range(std::size_t n, std::size_t on, std::size_t tap,
                        std::size_t stride, std::size_t pad, std::size_t& lo,
                        std::size_t& hi) {
  const long t = static_cast<long>(tap) - static_cast<long>(pad);
  long l = t >= 0 ? 0 : (-t + static_cast<long>(stride) - 1) / static_cast<long>(stride);
  long h = (static_cast<long>(n) - 1 - t);
  h = h < 0 ? -1 : h / static_cast<long>(stride);
  h = std::min(h, static_cast<long>(on) - 1);
  if (h < l) {
    lo = 1;
    hi = 0;
    return;
  }
  lo = static_cast<std::size_t>(l);
  hi = static_cast<std::size_t>(h);
}

}  // namespace detail

/// Cross-correlation with zero padding.
inline Tensor conv3d_forward(const Tensor& input, const Tensor& weights,
                             const Tensor& bias, std::size_t stride,
                             std::size_t pad) {
  const ConvGeometry g = conv_geometry(input, weights, stride, pad);
  PCSG_CHECK(bias.size() == g.out_channels, "conv3d: bias length mismatch");
  Tensor out({g.out_channels, g.ox, g.oy, g.oz});
  const std::size_t in_vol = g.x * g.y * g.z, out_vol = g.ox * g.oy * g.oz;
  const std::size_t k = g.kernel, k3 = k * k * k;
  const double* in = input.data();
  const double* w = weights.data();
  double* o = out.data();

#pragma omp parallel for schedule(static)
  for (long co_l = 0; co_l < static_cast<long>(g.out_channels); ++co_l) {
    const auto co = static_cast<std::size_t>(co_l);
    double* oc = o + co * out_vol;
    std::fill(oc, oc + out_vol, bias[co]);
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const double* ic = in + ci * in_vol;
      const double* wc = w + (co * g.in_channels + ci) * k3;
      for (std::size_t kx = 0; kx < k; ++kx) {
        std::size_t xlo, xhi;
        detail::valid_range(g.x, g.ox, kx, stride, pad, xlo, xhi);
        for (std::size_t ky = 0; ky < k; ++ky) {
          std::size_t ylo, yhi;
          detail::valid_range(g.y, g.oy, ky, stride, pad, ylo, yhi);
          for (std::size_t kz = 0; kz < k; ++kz) {
            std::size_t zlo, zhi;
            detail::valid_range(g.z, g.oz, kz, stride, pad, zlo, zhi);
            const double wv = wc[(kx * k + ky) * k + kz];
            if (wv == 0.0 || xlo > xhi || ylo > yhi || zlo > zhi) continue;
            for (std::size_t xo = xlo; xo <= xhi; ++xo) {
              const std::size_t xi = xo * stride + kx - pad;
              for (std::size_t yo = ylo; yo <= yhi; ++yo) {
                const std::size_t yi = yo * stride + ky - pad;
                double* orow = oc + (xo * g.oy + yo) * g.oz;
                const double* irow = ic + (xi * g.y + yi) * g.z;
                if (stride == 1) {
                  const std::size_t shift = kz - pad;  // wraps; index stays valid
                  for (std::size_t zo = zlo; zo <= zhi; ++zo)
                    orow[zo] += wv * irow[zo + shift];
                } else {
                  for (std::size_t zo = zlo; zo <= zhi; ++zo)
                    orow[zo] += wv * irow[zo * stride + kz - pad];
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

/// Gradients of conv3d_forward. Any of the output pointers may be null.
inline void conv3d_backward(const Tensor& input, const Tensor& weights,
                            const Tensor& grad_out, std::size_t stride,
                            std::size_t pad, Tensor* grad_input,
                            Tensor* grad_weights, Tensor* grad_bias) {
  const ConvGeometry g = conv_geometry(input, weights, stride, pad);
  PCSG_CHECK(grad_out.shape() == Shape({g.out_channels, g.ox, g.oy, g.oz}),
             "conv3d backward: upstream gradient shape mismatch");
  const std::size_t in_vol = g.x * g.y * g.z, out_vol = g.ox * g.oy * g.oz;
  const std::size_t k = g.kernel, k3 = k * k * k;
  const double* in = input.data();
  const double* w = weights.data();
  const double* go = grad_out.data();

  if (grad_bias) {
    *grad_bias = Tensor({g.out_channels});
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      double s = 0.0;
      for (std::size_t i = 0; i < out_vol; ++i) s += go[co * out_vol + i];
      (*grad_bias)[co] = s;
    }
  }

  if (grad_weights) {
    *grad_weights = Tensor(weights.shape());
    double* gw = grad_weights->data();
#pragma omp parallel for schedule(static)
    for (long co_l = 0; co_l < static_cast<long>(g.out_channels); ++co_l) {
      const auto co = static_cast<std::size_t>(co_l);
      const double* gc = go + co * out_vol;
      for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
        const double* ic = in + ci * in_vol;
        double* gwc = gw + (co * g.in_channels + ci) * k3;
        for (std::size_t kx = 0; kx < k; ++kx) {
          std::size_t xlo, xhi;
          detail::valid_range(g.x, g.ox, kx, stride, pad, xlo, xhi);
          for (std::size_t ky = 0; ky < k; ++ky) {
            std::size_t ylo, yhi;
            detail::valid_range(g.y, g.oy, ky, stride, pad, ylo, yhi);
            for (std::size_t kz = 0; kz < k; ++kz) {
              std::size_t zlo, zhi;
              detail::valid_range(g.z, g.oz, kz, stride, pad, zlo, zhi);
              if (xlo > xhi || ylo > yhi || zlo > zhi) continue;
              double s = 0.0;
              for (std::size_t xo = xlo; xo <= xhi; ++xo) {
                const std::size_t xi = xo * stride + kx - pad;
                for (std::size_t yo = ylo; yo <= yhi; ++yo) {
                  const std::size_t yi = yo * stride + ky - pad;
                  const double* grow = gc + (xo * g.oy + yo) * g.oz;
                  const double* irow = ic + (xi * g.y + yi) * g.z;
                  for (std::size_t zo = zlo; zo <= zhi; ++zo)
                    s += grow[zo] * irow[zo * stride + kz - pad];
                }
              }
              gwc[(kx * k + ky) * k + kz] = s;
            }
          }
        }
      }
    }
  }

  if (grad_input) {
    *grad_input = Tensor(input.shape());
    double* gi = grad_input->data();
#pragma omp parallel for schedule(static)
    for (long ci_l = 0; ci_l < static_cast<long>(g.in_channels); ++ci_l) {
      const auto ci = static_cast<std::size_t>(ci_l);
      double* gic = gi + ci * in_vol;
      for (std::size_t co = 0; co < g.out_channels; ++co) {
        const double* gc = go + co * out_vol;
        const double* wc = w + (co * g.in_channels + ci) * k3;
        for (std::size_t kx = 0; kx < k; ++kx) {
          std::size_t xlo, xhi;
          detail::valid_range(g.x, g.ox, kx, stride, pad, xlo, xhi);
          for (std::size_t ky = 0; ky < k; ++ky) {
            std::size_t ylo, yhi;
            detail::valid_range(g.y, g.oy, ky, stride, pad, ylo, yhi);
            for (std::size_t kz = 0; kz < k; ++kz) {
              std::size_t zlo, zhi;
              detail::valid_range(g.z, g.oz, kz, stride, pad, zlo, zhi);
              const double wv = wc[(kx * k + ky) * k + kz];
              if (wv == 0.0 || xlo > xhi || ylo > yhi || zlo > zhi) continue;
              for (std::size_t xo = xlo; xo <= xhi; ++xo) {
                const std::size_t xi = xo * stride + kx - pad;
                for (std::size_t yo = ylo; yo <= yhi; ++yo) {
                  const std::size_t yi = yo * stride + ky - pad;
                  const double* grow = gc + (xo * g.oy + yo) * g.oz;
                  double* irow = gic + (xi * g.y + yi) * g.z;
                  for (std::size_t zo = zlo; zo <= zhi; ++zo)
                    irow[zo * stride + kz - pad] += wv * grow[zo];
                }
              }
            }
          }
        }
      }
    }
  }
}

/// Result of a max pool: values plus, per output site, the flat input index
/// that produced it.
struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;
};

/// Window-2 max pool. Stride 2 halves every spatial extent; stride 1 keeps the
/// shape by replicating the last slice along each axis. Ties resolve to the
/// lowest flat input index.
inline PoolResult maxpool3d_forward(const Tensor& input, std::size_t stride) {
  PCSG_CHECK(input.rank() == 4, "maxpool3d: input must be (C,X,Y,Z)");
  PCSG_CHECK(stride == 1 || stride == 2, "maxpool3d: stride must be 1 or 2");
  const std::size_t c = input.dim(0), x = input.dim(1), y = input.dim(2),
                    z = input.dim(3);
  std::size_t ox = x, oy = y, oz = z;
  if (stride == 2) {
    PCSG_CHECK(x % 2 == 0 && y % 2 == 0 && z % 2 == 0,
               "maxpool3d: stride 2 needs even extents, got ",
               shape_string(input.shape()));
    ox /= 2;
    oy /= 2;
    oz /= 2;
  }
  PoolResult r{Tensor({c, ox, oy, oz}), std::vector<std::size_t>(c * ox * oy * oz)};
  const double* in = input.data();
  double* out = r.output.data();

#pragma omp parallel for schedule(static)
  for (long ch_l = 0; ch_l < static_cast<long>(c); ++ch_l) {
    const auto ch = static_cast<std::size_t>(ch_l);
    for (std::size_t i = 0; i < ox; ++i) {
      for (std::size_t j = 0; j < oy; ++j) {
        for (std::size_t l = 0; l < oz; ++l) {
          std::size_t best = 0;
          double best_v = 0.0;
          bool first = true;
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t xi = std::min(i * stride + dx, x - 1);
            for (std::size_t dy = 0; dy < 2; ++dy) {
              const std::size_t yi = std::min(j * stride + dy, y - 1);
              for (std::size_t dz = 0; dz < 2; ++dz) {
                const std::size_t zi = std::min(l * stride + dz, z - 1);
                const std::size_t idx = ((ch * x + xi) * y + yi) * z + zi;
                const double v = in[idx];
                if (first || v > best_v || (v == best_v && idx < best)) {
                  best = idx;
                  best_v = v;
                  first = false;
                }
              }
            }
          }
          const std::size_t o = ((ch * ox + i) * oy + j) * oz + l;
          out[o] = best_v;
          r.argmax[o] = best;
        }
      }
    }
  }
  return r;
}

inline Tensor maxpool3d_backward(const std::vector<std::size_t>& argmax,
                                 const Tensor& grad_out,
                                 const Shape& input_shape) {
  PCSG_CHECK(argmax.size() == grad_out.size(), "maxpool3d backward: size mismatch");
  Tensor gi(input_shape);
  // Sequential: replicated edges can route several outputs to one input.
  for (std::size_t o = 0; o < argmax.size(); ++o) gi[argmax[o]] += grad_out[o];
  return gi;
}

inline Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

inline Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  Tensor gi(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i)
    gi[i] = input[i] > 0.0 ? grad_out[i] : 0.0;
  return gi;
}

inline Tensor add_forward(const Tensor& a, const Tensor& b) {
  PCSG_CHECK(a.shape() == b.shape(), "residual_add: shape mismatch ",
             shape_string(a.shape()), " vs ", shape_string(b.shape()));
  Tensor out = a;
  out += b;
  return out;
}

/// Softmax along axis 0 of an (L, ...) tensor.
inline Tensor softmax_over_labels(const Tensor& logits) {
  PCSG_CHECK(logits.rank() >= 1 && logits.dim(0) >= 2,
             "softmax: need at least 2 labels");
  const std::size_t labels = logits.dim(0), sites = logits.size() / labels;
  Tensor out(logits.shape());
  for (std::size_t s = 0; s < sites; ++s) {
    double m = logits[s];
    for (std::size_t l = 1; l < labels; ++l) m = std::max(m, logits[l * sites + s]);
    double z = 0.0;
    for (std::size_t l = 0; l < labels; ++l) {
      const double e = std::exp(logits[l * sites + s] - m);
      out[l * sites + s] = e;
      z += e;
    }
    for (std::size_t l = 0; l < labels; ++l) out[l * sites + s] /= z;
  }
  return out;
}

/// Given the softmax output p and dL/dp, returns dL/dlogits (axis 0 labels).
inline Tensor softmax_over_labels_backward(const Tensor& probs,
                                           const Tensor& grad_out) {
  const std::size_t labels = probs.dim(0), sites = probs.size() / labels;
  Tensor gi(probs.shape());
  for (std::size_t s = 0; s < sites; ++s) {
    double inner = 0.0;
    for (std::size_t l = 0; l < labels; ++l)
      inner += grad_out[l * sites + s] * probs[l * sites + s];
    for (std::size_t l = 0; l < labels; ++l)
      gi[l * sites + s] = probs[l * sites + s] * (grad_out[l * sites + s] - inner);
  }
  return gi;
}

/// Row-wise softmax of an (N, L) matrix.
inline Tensor softmax_rows(const Tensor& logits) {
  PCSG_CHECK(logits.rank() == 2 && logits.dim(1) >= 2,
             "softmax_rows: need an (N, L>=2) matrix");
  const std::size_t n = logits.dim(0), labels = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * labels;
    double* o = out.data() + i * labels;
    const double m = *std::max_element(row, row + labels);
    double z = 0.0;
    for (std::size_t l = 0; l < labels; ++l) z += (o[l] = std::exp(row[l] - m));
    for (std::size_t l = 0; l < labels; ++l) o[l] /= z;
  }
  return out;
}

inline Tensor softmax_rows_backward(const Tensor& probs, const Tensor& grad_out) {
  const std::size_t n = probs.dim(0), labels = probs.dim(1);
  Tensor gi(probs.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = probs.data() + i * labels;
    const double* g = grad_out.data() + i * labels;
    double inner = 0.0;
    for (std::size_t l = 0; l < labels; ++l) inner += p[l] * g[l];
    for (std::size_t l = 0; l < labels; ++l)
      gi[i * labels + l] = p[l] * (g[l] - inner);
  }
  return gi;
}

}  // namespace pcseg::ops
