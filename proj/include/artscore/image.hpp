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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "artscore/tensor.hpp"

namespace artscore {

// 8-bit interleaved raster (row-major, channels innermost). RGB order for
// three channels.
struct RasterImage {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(int h, int w, int c = 3)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c, 0) {}

  std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

enum class ChannelPolicy {
  kConvert,  // gray is replicated to RGB, alpha is dropped
  kReject,
};

struct PreprocessConfig {
  int target_size = 800;
  ChannelPolicy channel_policy = ChannelPolicy::kConvert;
};

// Placement of the resized content inside the square canvas.
struct ContentBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

ContentBox content_box(int height, int width, int target_size = 800);

// Longer side resized to target_size with bilinear resampling, pixel values
// scaled to [0,1], shorter side zero-padded symmetrically. Odd padding puts the
// extra row/column at the bottom/right.
FeatureMap preprocess(const RasterImage& image, const PreprocessConfig& config = {});

// Decodes any format OpenCV can read; the result is always RGB.
RasterImage load_image(const std::filesystem::path& path);
void save_image(const RasterImage& image, const std::filesystem::path& path);

}  // namespace artscore
