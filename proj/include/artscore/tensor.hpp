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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace artscore {

// Dense channel-major (C x H x W) array.
template <typename T>
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> values;

  Tensor3() = default;
  Tensor3(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return values.size(); }

  T& at(int c, int h, int w) { return values[(static_cast<std::size_t>(c) * height + h) * width + w]; }
  const T& at(int c, int h, int w) const { return values[(static_cast<std::size_t>(c) * height + h) * width + w]; }

  std::span<T> span() { return values; }
  std::span<const T> span() const { return values; }

  bool same_shape(const Tensor3& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  bool all_finite() const {
    for (const T& v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
  bool operator==(const Tensor3&) const = default;
};

using FeatureMap = Tensor3<float>;

// Named trainable tensor, row-major.
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;

  ParamTensor() = default;
  ParamTensor(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    values.assign(count, 0.0f);
  }

  std::size_t size() const { return values.size(); }
  std::span<float> span() { return values; }
  std::span<const float> span() const { return values; }
  bool operator==(const ParamTensor&) const = default;
};

// Per-channel spatial mean.
template <typename T>
std::vector<T> global_average_pool(const Tensor3<T>& f) {
  std::vector<T> out(static_cast<std::size_t>(f.channels), T(0));
  const std::size_t plane = f.plane();
  for (int c = 0; c < f.channels; ++c) {
    T sum = 0;
    const T* p = f.values.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    out[static_cast<std::size_t>(c)] = sum / static_cast<T>(plane);
  }
  return out;
}

}  // namespace artscore
