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

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "artscore/taxonomy.hpp"

namespace artscore {

enum class SourceTier { kProfessional, kStudent };
enum class AnnotatorPhase { kExpert, kStudent };

std::string_view to_string(SourceTier t);
std::string_view to_string(AnnotatorPhase p);
SourceTier parse_source_tier(std::string_view s);
AnnotatorPhase parse_annotator_phase(std::string_view s);

struct ImageEntry {
  std::string image_id;
  std::string file_path;
  int category_index = 0;
  SourceTier source_tier = SourceTier::kProfessional;

  bool operator==(const ImageEntry&) const = default;
};

// One annotator's raw (0..100) scores for one image.
struct AnnotationRecord {
  std::string image_id;
  std::string annotator_id;
  AnnotatorPhase phase = AnnotatorPhase::kStudent;
  ScoreVector scores;
  std::string timestamp;  // ISO-8601, opaque to the store

  bool operator==(const AnnotationRecord&) const = default;
};

struct AggregationOptions {
  std::size_t min_annotators = 6;
  // Fraction of lowest and highest values dropped per score before averaging.
  // Zero gives the plain mean.
  double trim_fraction = 0.0;
};

// In-memory dataset: image metadata plus annotation records. Plain value type;
// see SharedDatasetStore for the concurrent wrapper.
class DatasetStore {
 public:
  using RecordKey = std::pair<std::string, std::string>;  // (image_id, annotator_id)

  void add_image(ImageEntry entry);
  // Throws NotFoundError for an unknown image, ValidationError on a mask
  // violation and ConflictError on a duplicate (image, annotator) pair unless
  // overwrite is set.
  void add_annotation(AnnotationRecord record, bool overwrite = false);

  bool has_image(const std::string& image_id) const { return images_.contains(image_id); }
  const ImageEntry& image(const std::string& image_id) const;
  const std::map<std::string, ImageEntry>& images() const { return images_; }
  const std::map<RecordKey, AnnotationRecord>& records() const { return records_; }
  std::vector<const AnnotationRecord*> records_for(const std::string& image_id) const;
  std::size_t annotation_count(const std::string& image_id) const;

  bool empty() const { return images_.empty(); }
  bool operator==(const DatasetStore&) const = default;

 private:
  std::map<std::string, ImageEntry> images_;
  std::map<RecordKey, AnnotationRecord> records_;
};

// Mean of annotator scores, normalized to [0,1]. Throws DomainError
// "insufficient annotations (n < m)" below the quorum.
ScoreVector aggregate(const DatasetStore& store, const std::string& image_id,
                      const AggregationOptions& options = {});

// Ground truth for every image that has reached the quorum.
std::map<std::string, ScoreVector> aggregate_all(const DatasetStore& store,
                                                 const AggregationOptions& options = {});

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};

// Stratified per category; each category contributes floor(n * (1 - ratio))
// images to validation and the rest to train.
Split split(const DatasetStore& store, double ratio = 0.9, std::uint64_t seed = 0);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct StatsReport {
  std::size_t num_images = 0;
  std::size_t num_records = 0;
  std::size_t total_score_count = 0;
  std::array<std::size_t, kNumAttributes> attribute_counts{};
  std::size_t distinct_annotators = 0;
  std::size_t expert_annotators = 0;
  std::size_t student_annotators = 0;
  double mean_annotations_per_image = 0.0;
  std::size_t professional_images = 0;
  std::size_t student_images = 0;
  // professional : student, 0 when there are no student images.
  double professional_to_student_ratio = 0.0;
  // Per-image mean raw total score; empty when nothing is annotated.
  std::vector<HistogramBin> histogram;
};

StatsReport statistics(const DatasetStore& store, double histogram_bin_width = 10.0);
nlohmann::ordered_json to_json(const StatsReport& report);
void write_histogram_csv(const StatsReport& report, std::ostream& out);

nlohmann::ordered_json to_json(const ImageEntry& e);
nlohmann::ordered_json to_json(const AnnotationRecord& r);
nlohmann::ordered_json attribute_scores_json(const ScoreVector& s);
ScoreVector score_vector_from_json(const nlohmann::json& total, const nlohmann::json& attribute_scores);

// JSON-lines (de)serialization. Output order is images sorted by image_id, then
// annotations sorted by (image_id, annotator_id). Parse errors carry line
// numbers; all problems are reported together in one ValidationError.
DatasetStore parse_dataset(std::istream& in);
void write_dataset(const DatasetStore& store, std::ostream& out);
DatasetStore load_dataset(const std::filesystem::path& path);
void save_dataset(const DatasetStore& store, const std::filesystem::path& path);

// Many readers, one writer. Each mutation is applied under an exclusive lock
// so readers never observe a partial record.
class SharedDatasetStore {
 public:
  SharedDatasetStore() = default;
  explicit SharedDatasetStore(DatasetStore store) : store_(std::move(store)) {}

  template <typename F>
  auto read(F&& f) const {
    std::shared_lock lock(mutex_);
    return f(static_cast<const DatasetStore&>(store_));
  }

  template <typename F>
  auto write(F&& f) {
    std::unique_lock lock(mutex_);
    return f(store_);
  }

  DatasetStore snapshot() const {
    std::shared_lock lock(mutex_);
    return store_;
  }

 private:
  mutable std::shared_mutex mutex_;
  DatasetStore store_;
};

}  // namespace artscore
