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

#include "artscore/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "artscore/errors.hpp"
#include "artscore/kernels.hpp"

namespace artscore {

ContentBox content_box(int height, int width, int target_size) {
  if (height < 1 || width < 1) throw DomainError("image must be at least 1x1");
  const int longer = std::max(height, width);
  const double scale = static_cast<double>(target_size) / longer;
  ContentBox box;
  box.height = std::clamp(static_cast<int>(std::lround(height * scale)), 1, target_size);
  box.width = std::clamp(static_cast<int>(std::lround(width * scale)), 1, target_size);
  box.top = (target_size - box.height) / 2;
  box.left = (target_size - box.width) / 2;
  return box;
}

FeatureMap preprocess(const RasterImage& image, const PreprocessConfig& config) {
  if (image.height < 1 || image.width < 1) throw DomainError("image must be at least 1x1");
  if (image.pixels.size() != static_cast<std::size_t>(image.height) * image.width * image.channels) {
    throw DomainError("raster buffer size does not match its dimensions");
  }
  if (image.channels != 3) {
    const bool convertible = image.channels == 1 || image.channels == 4;
    if (config.channel_policy == ChannelPolicy::kReject || !convertible) {
      throw DomainError("expected an RGB image, got " + std::to_string(image.channels) + " channel(s)");
    }
  }

  FeatureMap rgb(3, image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int src = image.channels == 1 ? 0 : c;
        rgb.at(c, y, x) = static_cast<float>(image.at(y, x, src)) / 255.0f;
      }
    }
  }

  const int n = config.target_size;
  const ContentBox box = content_box(image.height, image.width, n);
  FeatureMap content;
  if (box.height == image.height && box.width == image.width) {
    content = std::move(rgb);
  } else {
    content = FeatureMap(3, box.height, box.width);
    kernels::resize_bilinear<float>(3, image.height, image.width, box.height, box.width, rgb.span(),
                                    content.span());
  }

  FeatureMap out(3, n, n, 0.0f);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < box.height; ++y) {
      const float* src = &content.at(c, y, 0);
      std::copy(src, src + box.width, &out.at(c, box.top + y, box.left));
    }
  }
  return out;
}

RasterImage load_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (mat.empty()) throw IoError("cannot decode image " + path.string());
  cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);
  RasterImage img(mat.rows, mat.cols, 3);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<std::uint8_t>(y);
    std::copy(row, row + static_cast<std::size_t>(mat.cols) * 3,
              img.pixels.begin() + static_cast<std::ptrdiff_t>(y) * mat.cols * 3);
  }
  return img;
}

void save_image(const RasterImage& image, const std::filesystem::path& path) {
  const int type = image.channels == 1 ? CV_8UC1 : (image.channels == 4 ? CV_8UC4 : CV_8UC3);
  cv::Mat mat(image.height, image.width, type, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat out;
  if (image.channels == 3) {
    cv::cvtColor(mat, out, cv::COLOR_RGB2BGR);
  } else if (image.channels == 4) {
    cv::cvtColor(mat, out, cv::COLOR_RGBA2BGRA);
  } else {
    out = mat;
  }
  if (!cv::imwrite(path.string(), out)) throw IoError("cannot write image " + path.string());
}

}  // namespace artscore
