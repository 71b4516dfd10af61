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

// Synthetic data shared by the unit and acceptance tests.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "artscore/dataset.hpp"
#include "artscore/image.hpp"
#include "artscore/taxonomy.hpp"
#include "artscore/training.hpp"

namespace artscore::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("artscore_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline RasterImage gray_image(int height, int width, std::uint8_t level) {
  RasterImage im;
  im.height = height;
  im.width = width;
  im.channels = 3;
  im.pixels.assign(static_cast<std::size_t>(height) * width * 3, level);
  return im;
}

// Two colour fields split by a diagonal, plus a checker texture.
inline RasterImage synthetic_painting(std::uint64_t seed, int height, int width) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, 255);
  const int a[3] = {px(rng), px(rng), px(rng)};
  const int b[3] = {px(rng), px(rng), px(rng)};
  const int cell = 4 + static_cast<int>(rng() % 12);
  RasterImage im;
  im.height = height;
  im.width = width;
  im.channels = 3;
  im.pixels.resize(static_cast<std::size_t>(height) * width * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool upper = x * height > y * width;
      const int tex = ((x / cell + y / cell) % 2) ? 12 : -12;
      for (int c = 0; c < 3; ++c) {
        const int v = (upper ? a[c] : b[c]) + tex;
        im.pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }
  return im;
}

// Raw (0..100) scores carrying exactly the applicable attributes.
inline ScoreVector applicable_scores(int category_index, double total, std::mt19937_64& rng, double spread = 10.0) {
  std::uniform_real_distribution<double> jitter(-spread, spread);
  ScoreVector s;
  s.total = std::clamp(total, 0.0, 100.0);
  for (Attribute a : applicable_attributes(category_index).to_vector()) {
    s.attributes[a] = std::clamp(total + jitter(rng), 0.0, 100.0);
  }
  return s;
}

// Every image annotated by `annotators` distinct annotators with mask-exact
// records. per_category maps category index -> image count.
inline DatasetStore full_store(const std::map<int, std::size_t>& per_category, std::size_t annotators,
                               std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> base(30.0, 90.0);
  DatasetStore store;
  for (const auto& [cat, n] : per_category) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "c" + std::to_string(cat) + "_" + std::to_string(i);
      store.add_image({id, id + ".png", cat, i % 4 == 3 ? SourceTier::kStudent : SourceTier::kProfessional});
      const double t = base(rng);
      for (std::size_t a = 0; a < annotators; ++a) {
        AnnotationRecord r;
        r.image_id = id;
        r.annotator_id = (a < 2 ? "e" : "s") + std::to_string(a);
        r.phase = a < 2 ? AnnotatorPhase::kExpert : AnnotatorPhase::kStudent;
        r.scores = applicable_scores(cat, t + std::uniform_real_distribution<double>(-5, 5)(rng), rng);
        r.timestamp = "2024-01-01T00:00:00Z";
        store.add_annotation(std::move(r));
      }
    }
  }
  return store;
}

inline std::map<int, std::size_t> uniform_categories(std::size_t per_category) {
  std::map<int, std::size_t> out;
  for (int c = 1; c <= static_cast<int>(kNumCategories); ++c) out[c] = per_category;
  return out;
}

// Writes PNG images plus dataset.jsonl into dir; returns the dataset path.
// Image content is tied to the image's total score so training has signal.
inline std::filesystem::path write_image_dataset(const std::filesystem::path& dir,
                                                 const std::map<int, std::size_t>& per_category,
                                                 std::size_t annotators, std::uint64_t seed = 1) {
  DatasetStore store = full_store(per_category, annotators, seed);
  std::filesystem::create_directories(dir / "images");
  DatasetStore out;
  std::uint64_t k = 0;
  for (const auto& [id, img] : store.images()) {
    ImageEntry e = img;
    e.file_path = "images/" + id + ".png";
    const int h = 48 + static_cast<int>((seed + k) % 5) * 8;
    const int w = 64 - static_cast<int>((seed + k) % 3) * 8;
    save_image(synthetic_painting(seed * 7919 + k, h, w), dir / e.file_path);
    out.add_image(e);
    ++k;
  }
  for (const auto& [key, rec] : store.records()) out.add_annotation(rec);
  save_dataset(out, dir / "dataset.jsonl");
  return dir / "dataset.jsonl";
}

// Training data over in-memory synthetic rasters; ground truth is the
// aggregated store. Images are small so each stage runs quickly.
struct SyntheticTrainingSet {
  DatasetStore store;
  std::shared_ptr<std::map<std::string, RasterImage>> rasters = std::make_shared<std::map<std::string, RasterImage>>();
  TrainingData data;
};

inline SyntheticTrainingSet synthetic_training_set(const std::map<int, std::size_t>& per_category,
                                                   double ratio = 0.75, std::uint64_t seed = 1) {
  SyntheticTrainingSet set;
  set.store = full_store(per_category, 6, seed);
  std::uint64_t k = 0;
  for (const auto& [id, img] : set.store.images()) {
    (*set.rasters)[id] = synthetic_painting(seed * 131 + k++, 24 + static_cast<int>(k % 3) * 8, 32);
  }
  const auto truth = aggregate_all(set.store);
  const Split s = split(set.store, ratio, seed);
  auto examples = [&](const std::vector<std::string>& ids) {
    std::vector<Example> out;
    for (const auto& id : ids) out.push_back({id, set.store.image(id).category_index, truth.at(id)});
    return out;
  };
  set.data.train = examples(s.train);
  set.data.validation = examples(s.validation);
  auto rasters = set.rasters;
  set.data.images = [rasters](const std::string& id) { return rasters->at(id); };
  return set;
}

}  // namespace artscore::testing
