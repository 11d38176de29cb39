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

// Approximate high-dimensional Gaussian filtering on the permutohedral
// lattice: splat point values onto the vertices of their enclosing simplex,
// blur along each of the d+1 lattice directions with a [1/2, 1, 1/2]
// stencil, and slice back with the same barycentric weights. The result
// approximates sum_j exp(-|f_i - f_j|^2 / 2) v_j, self term included.
// Unlike the textbook version, output is rescaled by a closed-form mass
// factor, vertices needed to route mass between occupied ones are inserted
// before blurring, and the per-point self weight is computed exactly so
// callers can subtract it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "pcseg/error.hpp"

namespace pcseg {

namespace detail {

/// Open-addressing table from d-dimensional integer keys to dense ids.
class LatticeHash {
 public:
  explicit LatticeHash(std::size_t key_size, std::size_t expected = 64)
      : key_size_(key_size) {
    std::size_t cap = 64;
    while (cap < 2 * expected) cap <<= 1;
    table_.assign(cap, -1);
    keys_.reserve(expected * key_size);
  }

  std::size_t size() const { return count_; }
  const int* key(std::size_t id) const { return keys_.data() + id * key_size_; }

  /// Dense id of `key`; inserts it when `create`, otherwise returns -1 if absent.
  long find(const int* key, bool create) {
    if (create && 2 * (count_ + 1) > table_.size()) grow();
    std::size_t h = hash(key) & (table_.size() - 1);
    while (true) {
      const long e = table_[h];
      if (e < 0) {
        if (!create) return -1;
        table_[h] = static_cast<long>(count_);
        keys_.insert(keys_.end(), key, key + key_size_);
        return static_cast<long>(count_++);
      }
      if (equal(key, this->key(static_cast<std::size_t>(e)))) return e;
      h = (h + 1) & (table_.size() - 1);
    }
  }

  long find(const int* key) const {
    std::size_t h = hash(key) & (table_.size() - 1);
    while (true) {
      const long e = table_[h];
      if (e < 0) return -1;
      if (equal(key, this->key(static_cast<std::size_t>(e)))) return e;
      h = (h + 1) & (table_.size() - 1);
    }
  }

 private:
  std::size_t hash(const int* key) const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < key_size_; ++i) {
      k += static_cast<std::size_t>(static_cast<std::uint32_t>(key[i]));
      k *= 2531011u;
    }
    return k ^ (k >> 29);
  }

  bool equal(const int* a, const int* b) const {
    for (std::size_t i = 0; i < key_size_; ++i)
      if (a[i] != b[i]) return false;
    return true;
  }

  void grow() {
    std::vector<long> bigger(table_.size() * 2, -1);
    for (std::size_t id = 0; id < count_; ++id) {
      std::size_t h = hash(key(id)) & (bigger.size() - 1);
      while (bigger[h] >= 0) h = (h + 1) & (bigger.size() - 1);
      bigger[h] = static_cast<long>(id);
    }
    table_ = std::move(bigger);
  }

  std::size_t key_size_;
  std::size_t count_ = 0;
  std::vector<int> keys_;
  std::vector<long> table_;
};

}  // namespace detail

class PermutohedralLattice {
 public:
  PermutohedralLattice() = default;

  /// features: n rows of d values, already divided by their bandwidths.
  PermutohedralLattice(std::span<const double> features, std::size_t n, std::size_t d) {
    init(features, n, d);
  }

  void init(std::span<const double> features, std::size_t n, std::size_t d) {
    PCSG_CHECK(d >= 1, "lattice: feature dimension must be >= 1");
    PCSG_CHECK(features.size() == n * d, "lattice: expected ", n * d,
               " feature values, got ", features.size());
    n_ = n;
    d_ = d;
    const std::size_t d1 = d + 1;
    offsets_.assign(n * d1, 0);
    barycentric_.assign(n * d1, 0.0);

    std::vector<double> scale(d);
    const double inv_std = std::sqrt(2.0 / 3.0) * static_cast<double>(d1);
    for (std::size_t i = 0; i < d; ++i)
      scale[i] = inv_std / std::sqrt(static_cast<double>((i + 1) * (i + 2)));

    // canonical[k * d1 + j]: coordinate j of the k-th remainder-0 simplex vertex.
    std::vector<int> canonical(d1 * d1);
    for (std::size_t k = 0; k < d1; ++k) {
      for (std::size_t j = 0; j < d1 - k; ++j) canonical[k * d1 + j] = static_cast<int>(k);
      for (std::size_t j = d1 - k; j < d1; ++j)
        canonical[k * d1 + j] = static_cast<int>(k) - static_cast<int>(d1);
    }

    detail::LatticeHash hash(d, n * d1);
    std::vector<double> elevated(d1), bary(d1 + 1);
    std::vector<long> rem0(d1);
    std::vector<long> rank(d1);
    std::vector<int> key(d);
    const double down = 1.0 / static_cast<double>(d1);
    const long dd = static_cast<long>(d1);

    for (std::size_t p = 0; p < n; ++p) {
      const double* f = features.data() + p * d;
      // Project onto the hyperplane sum(x) = 0 in d+1 dimensions.
      double sm = 0.0;
      for (std::size_t j = d; j > 0; --j) {
        const double cf = f[j - 1] * scale[j - 1];
        elevated[j] = sm - static_cast<double>(j) * cf;
        sm += cf;
      }
      elevated[0] = sm;

      // Closest remainder-0 point, then the simplex ordering.
      long sum = 0;
      for (std::size_t i = 0; i < d1; ++i) {
        const double v = down * elevated[i];
        const double up_v = std::ceil(v) * static_cast<double>(d1);
        const double dn_v = std::floor(v) * static_cast<double>(d1);
        rem0[i] = static_cast<long>(up_v - elevated[i] < elevated[i] - dn_v ? up_v : dn_v);
        sum += rem0[i];
      }
      sum /= dd;
      std::fill(rank.begin(), rank.end(), 0);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d1; ++j) {
          if (elevated[i] - static_cast<double>(rem0[i]) <
              elevated[j] - static_cast<double>(rem0[j]))
            ++rank[i];
          else
            ++rank[j];
        }
      if (sum > 0) {
        for (std::size_t i = 0; i < d1; ++i) {
          if (rank[i] >= dd - sum) {
            rem0[i] -= dd;
            rank[i] += sum - dd;
          } else {
            rank[i] += sum;
          }
        }
      } else if (sum < 0) {
        for (std::size_t i = 0; i < d1; ++i) {
          if (rank[i] < -sum) {
            rem0[i] += dd;
            rank[i] += dd + sum;
          } else {
            rank[i] += sum;
          }
        }
      }

      std::fill(bary.begin(), bary.end(), 0.0);
      for (std::size_t i = 0; i < d1; ++i) {
        const double v = (elevated[i] - static_cast<double>(rem0[i])) * down;
        bary[static_cast<std::size_t>(static_cast<long>(d) - rank[i])] += v;
        bary[static_cast<std::size_t>(static_cast<long>(d1) - rank[i])] -= v;
      }
      bary[0] += 1.0 + bary[d1];

      for (std::size_t k = 0; k < d1; ++k) {
        for (std::size_t i = 0; i < d; ++i)
          key[i] = static_cast<int>(rem0[i]) +
                   canonical[k * d1 + static_cast<std::size_t>(rank[i])];
        offsets_[p * d1 + k] = static_cast<std::size_t>(hash.find(key.data(), true));
        barycentric_[p * d1 + k] = bary[k];
      }
    }

    close_vertex_set(hash);

    m_ = hash.size();
    neighbors_.assign(m_ * d1 * 2, -1);
    std::vector<int> n1(d), n2(d);
    const auto& h = std::as_const(hash);
    for (std::size_t j = 0; j < d1; ++j) {
      for (std::size_t i = 0; i < m_; ++i) {
        step(hash.key(i), j, -1, n1.data());
        step(hash.key(i), j, +1, n2.data());
        neighbors_[(j * m_ + i) * 2] = h.find(n1.data());
        neighbors_[(j * m_ + i) * 2 + 1] = h.find(n2.data());
      }
    }
    compute_self_weights();
  }

  /// The lattice's own weight K(i, i) for every point: the contribution of a
  /// point's splat to its own slice. Walks the blur paths between the
  /// vertices of the point's simplex through the neighbor table, so it matches
  /// compute() exactly (up to rounding), missing vertices included.
  const std::vector<double>& self_weights() const { return self_; }

  std::size_t point_count() const { return n_; }
  std::size_t feature_dim() const { return d_; }
  std::size_t lattice_size() const { return m_; }

  /// out (n x value_size) = S^T B S in. With reverse the blur directions run
  /// backwards, which applies the exact transpose.
  void compute(std::span<const double> in, std::span<double> out, std::size_t value_size,
               bool reverse = false) const {
    PCSG_CHECK(in.size() == n_ * value_size && out.size() == n_ * value_size,
               "lattice: value buffer size mismatch");
    const std::size_t d1 = d_ + 1;
    std::vector<double> values(m_ * value_size, 0.0), next(m_ * value_size, 0.0);

    for (std::size_t p = 0; p < n_; ++p)
      for (std::size_t k = 0; k < d1; ++k) {
        const double w = barycentric_[p * d1 + k];
        double* dst = values.data() + offsets_[p * d1 + k] * value_size;
        const double* src = in.data() + p * value_size;
        for (std::size_t c = 0; c < value_size; ++c) dst[c] += w * src[c];
      }

    for (std::size_t step = 0; step < d1; ++step) {
      const std::size_t j = reverse ? d_ - step : step;
      for (std::size_t i = 0; i < m_; ++i) {
        const long a = neighbors_[(j * m_ + i) * 2];
        const long b = neighbors_[(j * m_ + i) * 2 + 1];
        const double* self = values.data() + i * value_size;
        double* dst = next.data() + i * value_size;
        for (std::size_t c = 0; c < value_size; ++c) {
          double s = 0.0;
          if (a >= 0) s += values[static_cast<std::size_t>(a) * value_size + c];
          if (b >= 0) s += values[static_cast<std::size_t>(b) * value_size + c];
          dst[c] = self[c] + 0.5 * s;
        }
      }
      std::swap(values, next);
    }

    const double alpha = mass_scale(d_);
    for (std::size_t p = 0; p < n_; ++p) {
      double* dst = out.data() + p * value_size;
      for (std::size_t c = 0; c < value_size; ++c) dst[c] = 0.0;
      for (std::size_t k = 0; k < d1; ++k) {
        const double w = barycentric_[p * d1 + k] * alpha;
        const double* src = values.data() + offsets_[p * d1 + k] * value_size;
        for (std::size_t c = 0; c < value_size; ++c) dst[c] += w * src[c];
      }
    }
  }

 private:
  // key + sign * E_j, where E_j is +1 on every coordinate except -d on j. The
  // last coordinate is implied (keys sum to zero), so E_d is all ones here.
  void step(const int* key, std::size_t j, int sign, int* out) const {
    for (std::size_t c = 0; c < d_; ++c) out[c] = key[c] + sign;
    if (j < d_) out[j] -= sign * static_cast<int>(d_ + 1);
  }

  // Adds every vertex that lies on a blur path from one splatted vertex to
  // another. Without these, mass routed through an empty vertex is dropped
  // and sparse inputs lose most of their response; with them the sequential
  // blur equals the dense-lattice blur restricted to the data.
  //
  // After pass j, mass that still matters sits in A_j = Y_j & X_j, where Y_j
  // is reachable from the splat set P with directions 0..j and X_j reaches P
  // with directions j+1..d. Y is materialized up to a middle pass h; later
  // passes test X membership by depth-first search.
  void close_vertex_set(detail::LatticeHash& lattice) {
    const std::size_t d1 = d_ + 1;
    const std::size_t h = (d_ - 1) / 2;
    const auto& splat = std::as_const(lattice);
    std::vector<int> nb(d_);

    auto expand = [&](const detail::LatticeHash& from, std::size_t j) {
      detail::LatticeHash to(d_, from.size() * 3);
      for (std::size_t i = 0; i < from.size(); ++i) {
        to.find(from.key(i), true);
        for (int sign = -1; sign <= 1; sign += 2) {
          step(from.key(i), j, sign, nb.data());
          to.find(nb.data(), true);
        }
      }
      return to;
    };

    // reaches(key, j): some path over directions j..d lands in P.
    std::vector<std::vector<int>> scratch(d1 + 1, std::vector<int>(d_));
    auto reaches = [&](auto&& self, const int* key, std::size_t j) -> bool {
      if (j == d1) return splat.find(key) >= 0;
      if (self(self, key, j + 1)) return true;
      int* next = scratch[j].data();
      for (int sign = -1; sign <= 1; sign += 2) {
        step(key, j, sign, next);
        if (self(self, next, j + 1)) return true;
      }
      return false;
    };

    std::vector<detail::LatticeHash> forward;
    forward.reserve(h + 1);
    forward.push_back(expand(splat, 0));
    for (std::size_t j = 1; j <= h; ++j) forward.push_back(expand(forward.back(), j));

    std::vector<std::vector<int>> closed(d1);  // flattened keys of A_j
    const detail::LatticeHash& yh = forward[h];
    for (std::size_t i = 0; i < yh.size(); ++i)
      if (reaches(reaches, yh.key(i), h + 1))
        closed[h].insert(closed[h].end(), yh.key(i), yh.key(i) + d_);

    // Earlier passes: A_j = (A_{j+1} expanded along j+1) & Y_j.
    for (std::size_t j = h; j-- > 0;) {
      detail::LatticeHash seen(d_, closed[j + 1].size() / d_ * 3);
      const std::vector<int>& next = closed[j + 1];
      for (std::size_t i = 0; i < next.size(); i += d_) {
        for (int sign = -1; sign <= 1; ++sign) {
          if (sign == 0)
            std::copy_n(next.data() + i, d_, nb.data());
          else
            step(next.data() + i, j + 1, sign, nb.data());
          if (std::as_const(forward[j]).find(nb.data()) < 0) continue;
          const std::size_t before = seen.size();
          seen.find(nb.data(), true);
          if (seen.size() != before) closed[j].insert(closed[j].end(), nb.begin(), nb.end());
        }
      }
    }

    // Later passes: A_j = (A_{j-1} expanded along j) & X_j.
    for (std::size_t j = h + 1; j < d_; ++j) {
      detail::LatticeHash seen(d_, closed[j - 1].size() / d_ * 3);
      const std::vector<int>& prev = closed[j - 1];
      for (std::size_t i = 0; i < prev.size(); i += d_) {
        for (int sign = -1; sign <= 1; ++sign) {
          if (sign == 0)
            std::copy_n(prev.data() + i, d_, nb.data());
          else
            step(prev.data() + i, j, sign, nb.data());
          if (seen.find(nb.data()) >= 0 || !reaches(reaches, nb.data(), j + 1)) continue;
          seen.find(nb.data(), true);
          closed[j].insert(closed[j].end(), nb.begin(), nb.end());
        }
      }
    }

    for (const std::vector<int>& keys : closed)
      for (std::size_t i = 0; i < keys.size(); i += d_) lattice.find(keys.data() + i, true);
  }

  // Slice scale that makes the lattice kernel integrate to the Gaussian's
  // (2 pi)^(d/2). Each lattice vertex owns a feature-space volume of
  // (3/2)^(d/2) / sqrt(d+1) and every blur pass doubles the mass.
  static double mass_scale(std::size_t d) {
    const double dd = static_cast<double>(d);
    return std::pow(2.0 * std::numbers::pi / 1.5, dd / 2.0) * std::sqrt(dd + 1.0) /
           std::pow(2.0, dd + 1.0);
  }

  // Vertex k of a point's simplex is vertex 0 plus k distinct lattice
  // directions. A blur path from vertex a to vertex b takes one
  // step in {-1, 0, +1} along each direction; the steps must equal the
  // membership indicator of the directions separating a and b, shifted by a
  // constant c in {-1, 0, 1} (the d+1 directions sum to zero).
  void compute_self_weights() {
    const std::size_t d1 = d_ + 1;
    self_.assign(n_, 0.0);
    const double alpha = mass_scale(d_);
    // Vertex k+1 of a simplex is the second (n2) neighbor of vertex k along
    // one direction; recover which.
    std::vector<int> dir(d_ + 1);
    std::vector<int> member(d1);
    for (std::size_t p = 0; p < n_; ++p) {
      const std::size_t* off = offsets_.data() + p * d1;
      const double* w = barycentric_.data() + p * d1;
      // Step directions between consecutive simplex vertices.
      bool ok = true;
      for (std::size_t k = 0; k < d_; ++k) {
        dir[k] = -1;
        for (std::size_t j = 0; j < d1; ++j)
          if (neighbors_[(j * m_ + off[k]) * 2 + 1] == static_cast<long>(off[k + 1])) {
            dir[k] = static_cast<int>(j);
            break;
          }
        if (dir[k] < 0) ok = false;
      }
      PCSG_CHECK(ok, "lattice: inconsistent simplex");
      double total = 0.0;
      for (std::size_t a = 0; a < d1; ++a) {
        if (w[a] == 0.0) continue;
        for (std::size_t b = 0; b < d1; ++b) {
          if (w[b] == 0.0) continue;
          std::fill(member.begin(), member.end(), 0);
          if (b > a)
            for (std::size_t k = a; k < b; ++k) member[static_cast<std::size_t>(dir[k])] = 1;
          else if (a > b)
            for (std::size_t k = b; k < a; ++k) member[static_cast<std::size_t>(dir[k])] = -1;
          double paths = 0.0;
          for (int c = -1; c <= 1; ++c) {
            bool valid = true;
            for (std::size_t j = 0; j < d1 && valid; ++j) {
              const int sj = member[j] + c;
              if (sj < -1 || sj > 1) valid = false;
            }
            if (!valid) continue;
            long at = static_cast<long>(off[a]);
            double pw = 1.0;
            for (std::size_t j = 0; j < d1 && at >= 0; ++j) {
              const int sj = member[j] + c;
              if (sj == 0) continue;
              // Blur mass moves symmetrically, so a +1 step is the n2 entry.
              at = neighbors_[(j * m_ + static_cast<std::size_t>(at)) * 2 + (sj > 0 ? 1 : 0)];
              pw *= 0.5;
            }
            if (at == static_cast<long>(off[b])) paths += pw;
          }
          total += w[a] * w[b] * paths;
        }
      }
      self_[p] = alpha * total;
    }
  }

  std::size_t n_ = 0, d_ = 0, m_ = 0;
  std::vector<double> self_;
  std::vector<std::size_t> offsets_;
  std::vector<double> barycentric_;
  std::vector<long> neighbors_;  // (d+1) x m x 2
};

}  // namespace pcseg
