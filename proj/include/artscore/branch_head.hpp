/*
 * Copyright 2026 The artscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Scoring branch: efficient channel attention followed by a GAP + three-layer
// regressor. Templated on the scalar so gradient checks can run in double.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "artscore/errors.hpp"
#include "artscore/kernels.hpp"
#include "artscore/tensor.hpp"

namespace artscore {

enum class OddRounding {
  kCeilOdd,     // smallest odd integer >= t (reproduces k = 7 for C = 1792)
  kNearestOdd,  // odd integer closest to t, ties upward
};

struct EcaConfig {
  int gamma = 2;
  int b = 1;
  std::optional<int> kernel_override;
  OddRounding rounding = OddRounding::kCeilOdd;
};

// k = odd(log2(C) / gamma + b / gamma), clamped to >= 1.
int eca_kernel_size(int channels, const EcaConfig& config = {});

struct HeadShape {
  int channels = 0;
  int hidden1 = 512;
  int hidden2 = 64;
  int kernel = 1;

  bool operator==(const HeadShape&) const = default;
};

template <typename T>
struct HeadParams {
  std::vector<T> eca_kernel;  // kernel
  std::vector<T> w1, b1;      // hidden1 x channels, hidden1
  std::vector<T> w2, b2;      // hidden2 x hidden1, hidden2
  std::vector<T> w3, b3;      // 1 x hidden2, 1

  explicit HeadParams(const HeadShape& s = {})
      : eca_kernel(static_cast<std::size_t>(s.kernel)),
        w1(static_cast<std::size_t>(s.hidden1) * s.channels),
        b1(static_cast<std::size_t>(s.hidden1)),
        w2(static_cast<std::size_t>(s.hidden2) * s.hidden1),
        b2(static_cast<std::size_t>(s.hidden2)),
        w3(static_cast<std::size_t>(s.hidden2)),
        b3(1) {}

  // Stable tensor order used for checkpoints and optimizers.
  std::vector<std::vector<T>*> tensors() { return {&eca_kernel, &w1, &b1, &w2, &b2, &w3, &b3}; }
  std::vector<const std::vector<T>*> tensors() const { return {&eca_kernel, &w1, &b1, &w2, &b2, &w3, &b3}; }
  static std::vector<std::string> tensor_names() { return {"eca.kernel", "fc1.weight", "fc1.bias", "fc2.weight",
                                                           "fc2.bias", "fc3.weight", "fc3.bias"}; }
  bool operator==(const HeadParams&) const = default;
};

// Intermediate activations of a batched forward pass, kept for backward.
template <typename T>
struct HeadCache {
  int batch = 0;
  std::vector<T> pooled;     // g: batch x C
  std::vector<T> gate;       // w = sigmoid(conv1d(g)): batch x C
  std::vector<T> attended;   // u = w * g: batch x C
  std::vector<T> z1, a1;     // batch x hidden1
  std::vector<T> z2, a2;     // batch x hidden2
  std::vector<T> score;      // batch
};

template <typename T>
inline T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <typename T>
class BranchHead {
 public:
  BranchHead() = default;
  BranchHead(std::string branch, HeadShape shape) : branch_(std::move(branch)), shape_(shape), params_(shape) {
    if (shape.channels < 1 || shape.hidden1 < 1 || shape.hidden2 < 1) {
      throw ConfigError("branch " + branch_ + ": head dimensions must be positive");
    }
    if (shape.kernel < 1 || shape.kernel % 2 == 0 || shape.kernel > shape.channels) {
      throw ConfigError("branch " + branch_ + ": ECA kernel must be odd and <= channels");
    }
  }

  const std::string& branch() const { return branch_; }
  const HeadShape& shape() const { return shape_; }
  HeadParams<T>& params() { return params_; }
  const HeadParams<T>& params() const { return params_; }
  bool frozen() const { return frozen_; }
  void set_frozen(bool f) { frozen_ = f; }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor.
  template <typename Rng>
  void initialize(Rng& rng) {
    auto fill = [&](std::vector<T>& v, int fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (T& x : v) x = static_cast<T>(dist(rng));
    };
    fill(params_.eca_kernel, shape_.kernel);
    fill(params_.w1, shape_.channels);
    fill(params_.b1, shape_.channels);
    fill(params_.w2, shape_.hidden1);
    fill(params_.b2, shape_.hidden1);
    fill(params_.w3, shape_.hidden2);
    fill(params_.b3, shape_.hidden2);
  }

  // Channel gate sigmoid(conv1d(g, kernel)) with zero-padded "same" borders.
  void gate(std::span<const T> pooled, std::span<T> out) const {
    const int c_n = shape_.channels, k = shape_.kernel, pad = (k - 1) / 2;
    for (int c = 0; c < c_n; ++c) {
      T z = 0;
      for (int j = 0; j < k; ++j) {
        const int src = c + j - pad;
        if (src >= 0 && src < c_n) z += params_.eca_kernel[static_cast<std::size_t>(j)] * pooled[static_cast<std::size_t>(src)];
      }
      out[static_cast<std::size_t>(c)] = sigmoid(z);
    }
  }

  // ECA: reweights every channel of f by its gate value.
  Tensor3<T> eca_forward(const Tensor3<T>& f) const {
    check_channels(f.channels);
    const auto g = global_average_pool(f);
    std::vector<T> w(g.size());
    gate(g, w);
    Tensor3<T> out = f;
    const std::size_t plane = f.plane();
    for (int c = 0; c < f.channels; ++c) {
      T* p = out.values.data() + static_cast<std::size_t>(c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] *= w[static_cast<std::size_t>(c)];
    }
    return out;
  }

  // GAP + fc1/ReLU + fc2/ReLU + fc3/sigmoid on an already fused map.
  T head_forward(const Tensor3<T>& fused) const {
    check_channels(fused.channels);
    const auto u = global_average_pool(fused);
    return regress(u);
  }

  T regress(std::span<const T> u) const {
    std::vector<T> a1(static_cast<std::size_t>(shape_.hidden1)), a2(static_cast<std::size_t>(shape_.hidden2));
    kernels::reference::dense<T>(1, shape_.channels, shape_.hidden1, u, params_.w1, params_.b1, a1);
    for (T& v : a1) v = std::max(v, T(0));
    kernels::reference::dense<T>(1, shape_.hidden1, shape_.hidden2, a1, params_.w2, params_.b2, a2);
    for (T& v : a2) v = std::max(v, T(0));
    T z3 = params_.b3[0];
    for (int i = 0; i < shape_.hidden2; ++i) z3 += params_.w3[static_cast<std::size_t>(i)] * a2[static_cast<std::size_t>(i)];
    return sigmoid(z3);
  }

  T score(const Tensor3<T>& f) const { return head_forward(eca_forward(f)); }

  // Batched forward from pooled backbone features g (batch x C). Since the
  // gate is constant per channel, GAP(w * F) == w * GAP(F).
  HeadCache<T> forward_pooled(std::span<const T> pooled, int batch) const {
    const int c_n = shape_.channels, h1 = shape_.hidden1, h2 = shape_.hidden2;
    if (pooled.size() != static_cast<std::size_t>(batch) * c_n) {
      throw DomainError("branch " + branch_ + ": pooled feature size mismatch");
    }
    HeadCache<T> cache;
    cache.batch = batch;
    cache.pooled.assign(pooled.begin(), pooled.end());
    cache.gate.resize(pooled.size());
    cache.attended.resize(pooled.size());
    for (int n = 0; n < batch; ++n) {
      const std::size_t off = static_cast<std::size_t>(n) * c_n;
      gate(pooled.subspan(off, c_n), std::span<T>(cache.gate).subspan(off, c_n));
      for (int c = 0; c < c_n; ++c) cache.attended[off + c] = cache.gate[off + c] * pooled[off + c];
    }
    cache.z1.resize(static_cast<std::size_t>(batch) * h1);
    kernels::dense<T>(batch, c_n, h1, cache.attended, params_.w1, params_.b1, cache.z1);
    cache.a1 = cache.z1;
    for (T& v : cache.a1) v = std::max(v, T(0));
    cache.z2.resize(static_cast<std::size_t>(batch) * h2);
    kernels::dense<T>(batch, h1, h2, cache.a1, params_.w2, params_.b2, cache.z2);
    cache.a2 = cache.z2;
    for (T& v : cache.a2) v = std::max(v, T(0));
    std::vector<T> z3(static_cast<std::size_t>(batch));
    kernels::dense<T>(batch, h2, 1, cache.a2, params_.w3, params_.b3, z3);
    cache.score.resize(static_cast<std::size_t>(batch));
    for (int n = 0; n < batch; ++n) {
      if (!std::isfinite(z3[static_cast<std::size_t>(n)])) {
        throw NumericError("branch " + branch_ + ": non-finite activation");
      }
      cache.score[static_cast<std::size_t>(n)] = sigmoid(z3[static_cast<std::size_t>(n)]);
    }
    return cache;
  }

  // Back-propagates dL/dscore through the head. Returns parameter gradients;
  // when grad_pooled is non-empty it receives dL/dg (batch x C).
  HeadParams<T> backward(const HeadCache<T>& cache, std::span<const T> grad_score,
                         std::span<T> grad_pooled = {}) const {
    const int batch = cache.batch, c_n = shape_.channels, h1 = shape_.hidden1, h2 = shape_.hidden2;
    const int k = shape_.kernel, pad = (k - 1) / 2;
    HeadParams<T> grads(shape_);

    std::vector<T> dz3(static_cast<std::size_t>(batch));
    for (int n = 0; n < batch; ++n) {
      const T s = cache.score[static_cast<std::size_t>(n)];
      dz3[static_cast<std::size_t>(n)] = grad_score[static_cast<std::size_t>(n)] * s * (T(1) - s);
    }
    std::vector<T> dz2(static_cast<std::size_t>(batch) * h2);
    kernels::dense_backward<T>(batch, h2, 1, cache.a2, params_.w3, dz3, dz2, grads.w3, grads.b3);
    for (std::size_t i = 0; i < dz2.size(); ++i)
      if (cache.z2[i] <= T(0)) dz2[i] = 0;
    std::vector<T> dz1(static_cast<std::size_t>(batch) * h1);
    kernels::dense_backward<T>(batch, h1, h2, cache.a1, params_.w2, dz2, dz1, grads.w2, grads.b2);
    for (std::size_t i = 0; i < dz1.size(); ++i)
      if (cache.z1[i] <= T(0)) dz1[i] = 0;
    std::vector<T> du(static_cast<std::size_t>(batch) * c_n);
    kernels::dense_backward<T>(batch, c_n, h1, cache.attended, params_.w1, dz1, du, grads.w1, grads.b1);

    std::fill(grads.eca_kernel.begin(), grads.eca_kernel.end(), T(0));
    std::vector<T> dzg(static_cast<std::size_t>(c_n));
    for (int n = 0; n < batch; ++n) {
      const std::size_t off = static_cast<std::size_t>(n) * c_n;
      const T* g = cache.pooled.data() + off;
      for (int c = 0; c < c_n; ++c) {
        const T w = cache.gate[off + c];
        dzg[static_cast<std::size_t>(c)] = du[off + c] * g[c] * w * (T(1) - w);
      }
      for (int j = 0; j < k; ++j) {
        T acc = 0;
        for (int c = 0; c < c_n; ++c) {
          const int src = c + j - pad;
          if (src >= 0 && src < c_n) acc += dzg[static_cast<std::size_t>(c)] * g[src];
        }
        grads.eca_kernel[static_cast<std::size_t>(j)] += acc;
      }
      if (!grad_pooled.empty()) {
        for (int c = 0; c < c_n; ++c) grad_pooled[off + c] = du[off + c] * cache.gate[off + c];
        for (int c = 0; c < c_n; ++c) {
          for (int j = 0; j < k; ++j) {
            const int src = c + j - pad;
            if (src >= 0 && src < c_n)
              grad_pooled[off + src] += dzg[static_cast<std::size_t>(c)] * params_.eca_kernel[static_cast<std::size_t>(j)];
          }
        }
      }
    }
    return grads;
  }

 private:
  void check_channels(int c) const {
    if (c != shape_.channels) {
      throw DomainError("branch " + branch_ + ": expected " + std::to_string(shape_.channels) +
                        " channels, got " + std::to_string(c));
    }
  }

  std::string branch_;
  HeadShape shape_{};
  HeadParams<T> params_;
  bool frozen_ = false;
};

}  // namespace artscore
