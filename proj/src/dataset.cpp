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

#include "artscore/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "artscore/errors.hpp"

namespace artscore {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(SourceTier t) {
  return t == SourceTier::kProfessional ? "professional" : "student";
}

std::string_view to_string(AnnotatorPhase p) { return p == AnnotatorPhase::kExpert ? "expert" : "student"; }

SourceTier parse_source_tier(std::string_view s) {
  if (s == "professional") return SourceTier::kProfessional;
  if (s == "student") return SourceTier::kStudent;
  throw DomainError("unknown source tier '" + std::string(s) + "'");
}

AnnotatorPhase parse_annotator_phase(std::string_view s) {
  if (s == "expert") return AnnotatorPhase::kExpert;
  if (s == "student") return AnnotatorPhase::kStudent;
  throw DomainError("unknown annotator phase '" + std::string(s) + "'");
}

void DatasetStore::add_image(ImageEntry entry) {
  if (entry.image_id.empty()) throw DomainError("empty image id");
  if (!is_valid_category(entry.category_index)) {
    throw DomainError("image " + entry.image_id + ": unknown category " + std::to_string(entry.category_index));
  }
  if (images_.contains(entry.image_id)) throw ConflictError("duplicate image " + entry.image_id);
  auto id = entry.image_id;
  images_.emplace(std::move(id), std::move(entry));
}

const ImageEntry& DatasetStore::image(const std::string& image_id) const {
  auto it = images_.find(image_id);
  if (it == images_.end()) throw NotFoundError("unknown image " + image_id);
  return it->second;
}

void DatasetStore::add_annotation(AnnotationRecord record, bool overwrite) {
  const ImageEntry& img = image(record.image_id);
  if (record.annotator_id.empty()) throw DomainError("empty annotator id");
  auto result = validate_score_vector(img.category_index, record.scores, ScoreRange::raw());
  if (!result.ok()) {
    throw ValidationError("annotation " + record.image_id + "/" + record.annotator_id + " violates mask",
                          std::move(result.violations));
  }
  RecordKey key{record.image_id, record.annotator_id};
  auto it = records_.find(key);
  if (it != records_.end()) {
    if (!overwrite) throw ConflictError("duplicate annotator " + record.annotator_id + " for " + record.image_id);
    it->second = std::move(record);
    return;
  }
  records_.emplace(std::move(key), std::move(record));
}

std::vector<const AnnotationRecord*> DatasetStore::records_for(const std::string& image_id) const {
  std::vector<const AnnotationRecord*> out;
  auto it = records_.lower_bound({image_id, std::string()});
  for (; it != records_.end() && it->first.first == image_id; ++it) out.push_back(&it->second);
  return out;
}

std::size_t DatasetStore::annotation_count(const std::string& image_id) const {
  return records_for(image_id).size();
}

namespace {

double mean_of(std::vector<double> values, double trim_fraction) {
  std::size_t drop = 0;
  if (trim_fraction > 0.0) {
    std::sort(values.begin(), values.end());
    drop = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(values.size())));
    if (2 * drop >= values.size()) drop = (values.size() - 1) / 2;
  }
  double sum = 0.0;
  for (std::size_t i = drop; i < values.size() - drop; ++i) sum += values[i];
  return sum / static_cast<double>(values.size() - 2 * drop);
}

double normalize(double raw) { return std::clamp(raw / kRawScoreScale, 0.0, 1.0); }

}  // namespace

ScoreVector aggregate(const DatasetStore& store, const std::string& image_id, const AggregationOptions& options) {
  const ImageEntry& img = store.image(image_id);
  const auto records = store.records_for(image_id);
  if (records.size() < options.min_annotators || records.empty()) {
    throw DomainError("insufficient annotations (" + std::to_string(records.size()) + " < " +
                      std::to_string(std::max<std::size_t>(options.min_annotators, 1)) + ") for " + image_id);
  }
  ScoreVector out;
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto* r : records) values.push_back(r->scores.total);
  out.total = normalize(mean_of(values, options.trim_fraction));
  for (Attribute a : applicable_attributes(img.category_index).to_vector()) {
    values.clear();
    for (const auto* r : records) values.push_back(r->scores.attributes.at(a));
    out.attributes[a] = normalize(mean_of(values, options.trim_fraction));
  }
  return out;
}

std::map<std::string, ScoreVector> aggregate_all(const DatasetStore& store, const AggregationOptions& options) {
  std::map<std::string, ScoreVector> out;
  for (const auto& [id, img] : store.images()) {
    if (store.annotation_count(id) >= std::max<std::size_t>(options.min_annotators, 1)) {
      out.emplace(id, aggregate(store, id, options));
    }
  }
  return out;
}

Split split(const DatasetStore& store, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DomainError("split ratio must lie in (0,1), got " + std::to_string(ratio));
  }
  if (store.empty()) throw DomainError("cannot split an empty store");

  std::map<int, std::vector<std::string>> by_category;
  for (const auto& [id, img] : store.images()) by_category[img.category_index].push_back(id);

  Split out;
  for (auto& [cat, ids] : by_category) {
    // One stream per category so adding images to one category leaves the
    // others' partitions unchanged.
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(cat)));
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n = ids.size();
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - ratio) + 1e-9));
    out.validation.insert(out.validation.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train.insert(out.train.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_val), ids.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

StatsReport statistics(const DatasetStore& store, double histogram_bin_width) {
  if (!(histogram_bin_width > 0.0)) throw DomainError("histogram bin width must be positive");
  StatsReport report;
  report.num_images = store.images().size();
  report.num_records = store.records().size();
  report.total_score_count = report.num_records;

  std::set<std::string> annotators, experts, students;
  for (const auto& [key, rec] : store.records()) {
    for (const auto& [a, v] : rec.scores.attributes) report.attribute_counts[static_cast<std::size_t>(a)]++;
    annotators.insert(rec.annotator_id);
    (rec.phase == AnnotatorPhase::kExpert ? experts : students).insert(rec.annotator_id);
  }
  report.distinct_annotators = annotators.size();
  report.expert_annotators = experts.size();
  report.student_annotators = students.size();
  if (report.num_images > 0) {
    report.mean_annotations_per_image =
        static_cast<double>(report.num_records) / static_cast<double>(report.num_images);
  }
  for (const auto& [id, img] : store.images()) {
    (img.source_tier == SourceTier::kProfessional ? report.professional_images : report.student_images)++;
  }
  if (report.student_images > 0) {
    report.professional_to_student_ratio =
        static_cast<double>(report.professional_images) / static_cast<double>(report.student_images);
  }

  std::vector<double> image_means;
  for (const auto& [id, img] : store.images()) {
    const auto recs = store.records_for(id);
    if (recs.empty()) continue;
    double sum = 0.0;
    for (const auto* r : recs) sum += r->scores.total;
    image_means.push_back(sum / static_cast<double>(recs.size()));
  }
  if (!image_means.empty()) {
    const auto n_bins = static_cast<std::size_t>(std::ceil(kRawScoreScale / histogram_bin_width - 1e-9));
    for (std::size_t b = 0; b < n_bins; ++b) {
      report.histogram.push_back({b * histogram_bin_width,
                                  std::min(kRawScoreScale, (b + 1) * histogram_bin_width), 0});
    }
    for (double m : image_means) {
      auto b = static_cast<std::size_t>(std::floor(m / histogram_bin_width));
      report.histogram[std::min(b, n_bins - 1)].count++;
    }
  }
  return report;
}

ordered_json to_json(const StatsReport& r) {
  ordered_json j;
  j["num_images"] = r.num_images;
  j["num_records"] = r.num_records;
  ordered_json counts;
  counts["total_score"] = r.total_score_count;
  for (Attribute a : kAllAttributes) counts[std::string(attribute_key(a))] = r.attribute_counts[static_cast<std::size_t>(a)];
  j["annotation_counts"] = std::move(counts);
  j["distinct_annotators"] = r.distinct_annotators;
  j["expert_annotators"] = r.expert_annotators;
  j["student_annotators"] = r.student_annotators;
  j["mean_annotations_per_image"] = r.mean_annotations_per_image;
  j["professional_images"] = r.professional_images;
  j["student_images"] = r.student_images;
  j["professional_to_student_ratio"] = r.professional_to_student_ratio;
  auto hist = ordered_json::array();
  for (const auto& b : r.histogram) hist.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  j["histogram"] = std::move(hist);
  return j;
}

void write_histogram_csv(const StatsReport& report, std::ostream& out) {
  out << "bin_lo,bin_hi,count\n";
  for (const auto& b : report.histogram) out << b.lo << ',' << b.hi << ',' << b.count << '\n';
}

ordered_json attribute_scores_json(const ScoreVector& s) {
  ordered_json obj = ordered_json::object();
  for (const auto& [a, v] : s.attributes) obj[std::string(attribute_key(a))] = v;
  return obj;
}

ScoreVector score_vector_from_json(const json& total, const json& attribute_scores) {
  ScoreVector s;
  if (!total.is_number()) throw DomainError("total_score must be a number");
  s.total = total.get<double>();
  if (!attribute_scores.is_object()) throw DomainError("attribute_scores must be an object");
  for (const auto& [key, value] : attribute_scores.items()) {
    if (!value.is_number()) throw DomainError("attribute score '" + key + "' must be a number");
    s.attributes[attribute_from_key(key)] = value.get<double>();
  }
  return s;
}

ordered_json to_json(const ImageEntry& e) {
  ordered_json j;
  j["kind"] = "image";
  j["image_id"] = e.image_id;
  j["file_path"] = e.file_path;
  j["category_index"] = e.category_index;
  j["source_tier"] = to_string(e.source_tier);
  return j;
}

ordered_json to_json(const AnnotationRecord& r) {
  ordered_json j;
  j["kind"] = "annotation";
  j["image_id"] = r.image_id;
  j["annotator_id"] = r.annotator_id;
  j["phase"] = to_string(r.phase);
  j["total_score"] = r.scores.total;
  j["attribute_scores"] = attribute_scores_json(r.scores);
  j["timestamp"] = r.timestamp;
  return j;
}

namespace {

ImageEntry image_from_json(const json& j) {
  ImageEntry e;
  e.image_id = j.at("image_id").get<std::string>();
  e.file_path = j.value("file_path", std::string());
  e.category_index = j.at("category_index").get<int>();
  e.source_tier = parse_source_tier(j.value("source_tier", std::string("professional")));
  return e;
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.annotator_id = j.at("annotator_id").get<std::string>();
  r.phase = parse_annotator_phase(j.value("phase", std::string("student")));
  r.scores = score_vector_from_json(j.at("total_score"), j.at("attribute_scores"));
  r.timestamp = j.value("timestamp", std::string());
  return r;
}

}  // namespace

DatasetStore parse_dataset(std::istream& in) {
  std::vector<std::pair<std::size_t, ImageEntry>> images;
  std::vector<std::pair<std::size_t, AnnotationRecord>> annotations;
  std::vector<std::string> errors;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "image") {
        images.emplace_back(line_no, image_from_json(j));
      } else if (kind == "annotation") {
        annotations.emplace_back(line_no, annotation_from_json(j));
      } else {
        errors.push_back("line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      errors.push_back("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
  }

  DatasetStore store;
  for (auto& [ln, img] : images) {
    try {
      store.add_image(std::move(img));
    } catch (const Error& e) {
      errors.push_back("line " + std::to_string(ln) + ": " + e.what());
    }
  }
  for (auto& [ln, rec] : annotations) {
    const std::string where = "line " + std::to_string(ln) + " (" + rec.image_id + "/" + rec.annotator_id + "): ";
    try {
      store.add_annotation(std::move(rec));
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) errors.push_back(where + v);
    } catch (const Error& e) {
      errors.push_back(where + e.what());
    }
  }
  if (!errors.empty()) {
    std::string message = "dataset has " + std::to_string(errors.size()) + " error(s)";
    throw ValidationError(std::move(message), std::move(errors));
  }
  return store;
}

void write_dataset(const DatasetStore& store, std::ostream& out) {
  for (const auto& [id, img] : store.images()) out << to_json(img).dump() << '\n';
  for (const auto& [key, rec] : store.records()) out << to_json(rec).dump() << '\n';
}

DatasetStore load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return parse_dataset(in);
}

void save_dataset(const DatasetStore& store, const std::filesystem::path& path) {
  // Write-then-rename so readers never see a half-written file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write dataset " + tmp.string());
    write_dataset(store, out);
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace artscore
