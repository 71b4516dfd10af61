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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artscore/dataset.hpp"

namespace artscore {

enum class CampaignPhase { kBenchmark, kScoring, kClosed };
enum class Role { kExpert, kStudent };

std::string_view to_string(CampaignPhase p);
std::string_view to_string(Role r);
Role parse_role(std::string_view s);

struct AnnotatorSpec {
  std::string annotator_id;
  Role role = Role::kStudent;
};

struct CampaignSpec {
  std::vector<ImageEntry> images;
  std::vector<AnnotatorSpec> annotators;
  std::size_t quorum = 6;
};

struct BenchmarkReference {
  std::string image_id;
  std::string file_path;
  ScoreVector scores;  // raw 0..100
};

struct Caller {
  std::string campaign_id;
  std::string annotator_id;
  Role role = Role::kStudent;
};

struct CreatedCampaign {
  std::string campaign_id;
  std::map<std::string, std::string> tokens;  // annotator_id -> bearer token
};

struct Task {
  std::string image_id;
  std::string image_url;
  int category_index = 0;
  AttributeSet applicable;
  std::vector<BenchmarkReference> benchmarks;
};

struct AnnotatorProgress {
  std::size_t assigned = 0;
  std::size_t done = 0;
  std::size_t pending() const { return assigned - done; }
};

struct CampaignProgress {
  CampaignPhase phase = CampaignPhase::kBenchmark;
  std::size_t quorum = 0;
  std::size_t num_images = 0;
  std::size_t num_records = 0;
  std::map<std::string, AnnotatorProgress> annotators;
  std::vector<std::string> images_below_quorum;
  double mean_annotations_per_image = 0.0;
};

struct ExportPaths {
  std::filesystem::path dataset;
  std::filesystem::path aggregates;
};

nlohmann::ordered_json to_json(const CampaignProgress& p);
nlohmann::ordered_json to_json(const Task& t);

// Final scores written next to the exported dataset, one JSON object per line.
std::map<std::string, ScoreVector> load_aggregates(const std::filesystem::path& path);

// Annotation campaigns: expert benchmark phase, then student scoring phase with
// exact-quorum task assignment, then close and export. Thread-safe; each
// campaign serializes its own mutations.
class AnnotationService {
 public:
  // With a data directory every campaign keeps campaign.json (state snapshot)
  // and annotations.jsonl (append-only records) under <data_dir>/<id>/, and
  // existing campaigns are restored on construction.
  explicit AnnotationService(std::optional<std::filesystem::path> data_dir = std::nullopt);
  ~AnnotationService();

  CreatedCampaign create_campaign(const CampaignSpec& spec);

  // Resolves a bearer token; throws ForbiddenError for unknown tokens.
  Caller authenticate(const std::string& campaign_id, const std::string& token) const;

  void set_benchmarks(const Caller& caller, int category_index, std::vector<BenchmarkReference> references);
  // Returns annotator_id -> assigned image ids.
  std::map<std::string, std::vector<std::string>> open_scoring(const Caller& caller);
  void submit_annotation(const Caller& caller, const std::string& image_id, const ScoreVector& scores,
                         bool overwrite = false);
  std::vector<Task> pending_tasks(const Caller& caller, const std::string& annotator_id) const;
  CampaignProgress progress(const std::string& campaign_id) const;
  // Writes dataset.jsonl and aggregates.jsonl to out_dir (defaults to
  // <data_dir>/<id>/export).
  ExportPaths close_and_export(const Caller& caller, std::optional<std::filesystem::path> out_dir = std::nullopt);

  CampaignPhase phase(const std::string& campaign_id) const;
  DatasetStore records(const std::string& campaign_id) const;
  std::optional<std::filesystem::path> image_path(const std::string& campaign_id, const std::string& image_id) const;
  std::vector<std::string> campaign_ids() const;

 private:
  struct Campaign;
  Campaign& find(const std::string& id) const;
  void persist_snapshot(const Campaign& c) const;
  void restore();

  std::optional<std::filesystem::path> data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<Campaign>> campaigns_;
  std::size_t next_id_ = 1;
};

}  // namespace artscore
