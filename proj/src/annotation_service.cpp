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

#include "artscore/annotation_service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "artscore/errors.hpp"

namespace artscore {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(CampaignPhase p) {
  switch (p) {
    case CampaignPhase::kBenchmark: return "benchmark";
    case CampaignPhase::kScoring: return "scoring";
    case CampaignPhase::kClosed: return "closed";
  }
  return "?";
}

std::string_view to_string(Role r) { return r == Role::kExpert ? "expert" : "student"; }

Role parse_role(std::string_view s) {
  if (s == "expert") return Role::kExpert;
  if (s == "student") return Role::kStudent;
  throw DomainError("unknown role '" + std::string(s) + "'");
}

namespace {

CampaignPhase parse_phase(std::string_view s) {
  if (s == "benchmark") return CampaignPhase::kBenchmark;
  if (s == "scoring") return CampaignPhase::kScoring;
  if (s == "closed") return CampaignPhase::kClosed;
  throw DomainError("unknown campaign phase '" + std::string(s) + "'");
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_token() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ordered_json reference_json(const BenchmarkReference& r) {
  ordered_json j;
  j["image_id"] = r.image_id;
  j["file_path"] = r.file_path;
  j["total_score"] = r.scores.total;
  j["attribute_scores"] = attribute_scores_json(r.scores);
  return j;
}

BenchmarkReference reference_from_json(const json& j) {
  BenchmarkReference r;
  r.image_id = j.at("image_id").get<std::string>();
  r.file_path = j.value("file_path", std::string());
  r.scores = score_vector_from_json(j.at("total_score"), j.at("attribute_scores"));
  return r;
}

}  // namespace

struct AnnotationService::Campaign {
  std::string id;
  CampaignPhase phase = CampaignPhase::kBenchmark;
  std::size_t quorum = 6;
  std::vector<AnnotatorSpec> annotators;  // roster order
  std::map<std::string, std::string> tokens;  // token -> annotator_id
  std::map<int, std::vector<BenchmarkReference>> benchmarks;
  std::map<std::string, std::vector<std::string>> assignments;  // annotator -> image ids
  DatasetStore store;
  mutable std::mutex mutex;

  const AnnotatorSpec* annotator(const std::string& a) const {
    for (const auto& s : annotators)
      if (s.annotator_id == a) return &s;
    return nullptr;
  }
  bool is_assigned(const std::string& annotator_id, const std::string& image_id) const {
    auto it = assignments.find(annotator_id);
    return it != assignments.end() && std::find(it->second.begin(), it->second.end(), image_id) != it->second.end();
  }
  std::filesystem::path dir(const std::filesystem::path& root) const { return root / id; }
};

AnnotationService::AnnotationService(std::optional<std::filesystem::path> data_dir) : data_dir_(std::move(data_dir)) {
  if (data_dir_) {
    std::filesystem::create_directories(*data_dir_);
    restore();
  }
}

AnnotationService::~AnnotationService() = default;

AnnotationService::Campaign& AnnotationService::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = campaigns_.find(id);
  if (it == campaigns_.end()) throw NotFoundError("unknown campaign " + id);
  return *it->second;
}

CreatedCampaign AnnotationService::create_campaign(const CampaignSpec& spec) {
  std::vector<std::string> problems;
  if (spec.images.empty()) problems.push_back("empty image roster");
  if (spec.annotators.empty()) problems.push_back("empty annotator roster");
  if (spec.quorum < 1) problems.push_back("quorum must be >= 1");
  std::set<std::string> ids;
  for (const auto& a : spec.annotators) {
    if (a.annotator_id.empty()) problems.push_back("empty annotator id");
    if (!ids.insert(a.annotator_id).second) problems.push_back("duplicate annotator " + a.annotator_id);
  }
  if (!spec.annotators.empty() && spec.quorum > spec.annotators.size()) {
    problems.push_back("quorum unreachable: " + std::to_string(spec.quorum) + " distinct annotators needed, " +
                       std::to_string(spec.annotators.size()) + " available");
  }
  auto campaign = std::make_unique<Campaign>();
  for (const auto& img : spec.images) {
    try {
      campaign->store.add_image(img);
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::string message = "invalid campaign: " + problems.front();
    throw ValidationError(std::move(message), std::move(problems));
  }

  campaign->quorum = spec.quorum;
  campaign->annotators = spec.annotators;
  CreatedCampaign created;
  for (const auto& a : spec.annotators) {
    const auto token = random_token();
    campaign->tokens[token] = a.annotator_id;
    created.tokens[a.annotator_id] = token;
  }

  std::unique_lock lock(mutex_);
  char buf[32];
  do {
    std::snprintf(buf, sizeof(buf), "c%04zu", next_id_++);
  } while (campaigns_.contains(buf));
  campaign->id = buf;
  created.campaign_id = campaign->id;
  if (data_dir_) {
    std::filesystem::create_directories(campaign->dir(*data_dir_));
    std::ofstream(campaign->dir(*data_dir_) / "annotations.jsonl", std::ios::app);
    persist_snapshot(*campaign);
  }
  campaigns_.emplace(campaign->id, std::move(campaign));
  return created;
}

Caller AnnotationService::authenticate(const std::string& campaign_id, const std::string& token) const {
  Campaign& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  auto it = c.tokens.find(token);
  if (it == c.tokens.end()) throw ForbiddenError("invalid token for campaign " + campaign_id);
  return {campaign_id, it->second, c.annotator(it->second)->role};
}

void AnnotationService::set_benchmarks(const Caller& caller, int category_index,
                                       std::vector<BenchmarkReference> references) {
  Campaign& c = find(caller.campaign_id);
  std::lock_guard lock(c.mutex);
  if (caller.role != Role::kExpert) throw ForbiddenError("role: only experts may set benchmarks");
  if (c.phase != CampaignPhase::kBenchmark) {
    throw ConflictError("benchmarks are only writable in the benchmark phase (phase is " +
                        std::string(to_string(c.phase)) + ")");
  }
  if (!is_valid_category(category_index)) throw DomainError("unknown category " + std::to_string(category_index));
  if (references.empty()) throw DomainError("at least one benchmark reference is required");
  std::vector<std::string> violations;
  for (const auto& r : references) {
    for (const auto& v : validate_score_vector(category_index, r.scores, ScoreRange::raw()).violations) {
      violations.push_back(r.image_id + ": " + v);
    }
  }
  if (!violations.empty()) throw ValidationError("benchmark violates the category mask", std::move(violations));
  c.benchmarks[category_index] = std::move(references);
  persist_snapshot(c);
}

std::map<std::string, std::vector<std::string>> AnnotationService::open_scoring(const Caller& caller) {
  Campaign& c = find(caller.campaign_id);
  std::lock_guard lock(c.mutex);
  if (caller.role != Role::kExpert) throw ForbiddenError("role: only experts may open scoring");
  if (c.phase == CampaignPhase::kScoring) throw ConflictError("already scoring");
  if (c.phase == CampaignPhase::kClosed) throw ConflictError("campaign is closed");

  std::set<int> active;
  for (const auto& [id, img] : c.store.images()) active.insert(img.category_index);
  std::vector<std::string> missing;
  for (int cat : active) {
    if (!c.benchmarks.contains(cat) || c.benchmarks.at(cat).empty()) {
      missing.push_back("category " + std::to_string(cat) + " has no benchmark");
    }
  }
  if (!missing.empty()) throw ValidationError("missing benchmarks", std::move(missing));

  // Images ordered by category, then id; annotators taken round-robin so
  // every image gets `quorum` distinct annotators and task counts differ by
  // at most one.
  std::vector<const ImageEntry*> ordered;
  for (const auto& [id, img] : c.store.images()) ordered.push_back(&img);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ImageEntry* a, const ImageEntry* b) { return a->category_index < b->category_index; });
  c.assignments.clear();
  for (const auto& a : c.annotators) c.assignments[a.annotator_id];
  const std::size_t n_annot = c.annotators.size();
  std::size_t cursor = 0;
  for (const ImageEntry* img : ordered) {
    for (std::size_t j = 0; j < c.quorum; ++j) {
      c.assignments[c.annotators[(cursor + j) % n_annot].annotator_id].push_back(img->image_id);
    }
    cursor = (cursor + c.quorum) % n_annot;
  }
  c.phase = CampaignPhase::kScoring;
  persist_snapshot(c);
  return c.assignments;
}

void AnnotationService::submit_annotation(const Caller& caller, const std::string& image_id,
                                          const ScoreVector& scores, bool overwrite) {
  Campaign& c = find(caller.campaign_id);
  std::lock_guard lock(c.mutex);
  if (c.phase != CampaignPhase::kScoring) {
    throw ConflictError("submissions are only accepted in the scoring phase (phase is " +
                        std::string(to_string(c.phase)) + ")");
  }
  if (!c.store.has_image(image_id)) throw NotFoundError("unknown image " + image_id);
  // Experts may add records beyond their assignment.
  if (caller.role != Role::kExpert && !c.is_assigned(caller.annotator_id, image_id)) {
    throw ForbiddenError("not assigned: " + image_id + " is not assigned to " + caller.annotator_id);
  }

  AnnotationRecord rec;
  rec.image_id = image_id;
  rec.annotator_id = caller.annotator_id;
  rec.phase = caller.role == Role::kExpert ? AnnotatorPhase::kExpert : AnnotatorPhase::kStudent;
  rec.scores = scores;
  rec.timestamp = now_iso8601();

  auto result = validate_score_vector(c.store.image(image_id).category_index, scores, ScoreRange::raw());
  if (!result.ok()) throw ValidationError("annotation violates the category mask", std::move(result.violations));
  if (!overwrite && c.store.records().contains({image_id, caller.annotator_id})) {
    throw ConflictError("duplicate submission by " + caller.annotator_id + " for " + image_id);
  }
  if (data_dir_) {
    // One complete line per write; a torn final line is ignored on restore.
    const std::string line = to_json(rec).dump() + "\n";
    std::ofstream out(c.dir(*data_dir_) / "annotations.jsonl", std::ios::app | std::ios::binary);
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw IoError("cannot append annotation for " + image_id);
  }
  c.store.add_annotation(std::move(rec), overwrite);
}

std::vector<Task> AnnotationService::pending_tasks(const Caller& caller, const std::string& annotator_id) const {
  Campaign& c = find(caller.campaign_id);
  std::lock_guard lock(c.mutex);
  if (caller.annotator_id != annotator_id && caller.role != Role::kExpert) {
    throw ForbiddenError("role: cannot list tasks of another annotator");
  }
  if (!c.annotator(annotator_id)) throw NotFoundError("unknown annotator " + annotator_id);
  std::vector<Task> out;
  auto it = c.assignments.find(annotator_id);
  if (it == c.assignments.end()) return out;
  for (const auto& image_id : it->second) {
    if (c.store.records().contains({image_id, annotator_id})) continue;
    const ImageEntry& img = c.store.image(image_id);
    Task t;
    t.image_id = image_id;
    t.image_url = "/campaigns/" + c.id + "/images/" + image_id;
    t.category_index = img.category_index;
    t.applicable = applicable_attributes(img.category_index);
    if (auto b = c.benchmarks.find(img.category_index); b != c.benchmarks.end()) t.benchmarks = b->second;
    out.push_back(std::move(t));
  }
  return out;
}

CampaignProgress AnnotationService::progress(const std::string& campaign_id) const {
  Campaign& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  CampaignProgress p;
  p.phase = c.phase;
  p.quorum = c.quorum;
  p.num_images = c.store.images().size();
  p.num_records = c.store.records().size();
  for (const auto& a : c.annotators) {
    AnnotatorProgress ap;
    if (auto it = c.assignments.find(a.annotator_id); it != c.assignments.end()) {
      ap.assigned = it->second.size();
      for (const auto& img : it->second) ap.done += c.store.records().contains({img, a.annotator_id}) ? 1 : 0;
    }
    p.annotators[a.annotator_id] = ap;
  }
  for (const auto& [id, img] : c.store.images()) {
    if (c.store.annotation_count(id) < c.quorum) p.images_below_quorum.push_back(id);
  }
  if (p.num_images > 0) p.mean_annotations_per_image = static_cast<double>(p.num_records) / p.num_images;
  return p;
}

ExportPaths AnnotationService::close_and_export(const Caller& caller, std::optional<std::filesystem::path> out_dir) {
  Campaign& c = find(caller.campaign_id);
  std::lock_guard lock(c.mutex);
  if (caller.role != Role::kExpert) throw ForbiddenError("role: only experts may close a campaign");
  if (c.phase != CampaignPhase::kScoring) {
    throw ConflictError("only a campaign in the scoring phase can be closed (phase is " +
                        std::string(to_string(c.phase)) + ")");
  }
  std::vector<std::string> below;
  for (const auto& [id, img] : c.store.images()) {
    const auto n = c.store.annotation_count(id);
    if (n < c.quorum) below.push_back(id + " (" + std::to_string(n) + "/" + std::to_string(c.quorum) + ")");
  }
  if (!below.empty()) {
    std::string msg = "images below quorum:";
    for (const auto& b : below) msg += " " + b;
    throw ConflictError(msg);
  }

  std::filesystem::path dir;
  if (out_dir) {
    dir = *out_dir;
  } else if (data_dir_) {
    dir = c.dir(*data_dir_) / "export";
  } else {
    throw ConfigError("no export directory given and the service has no data directory");
  }
  std::filesystem::create_directories(dir);
  ExportPaths paths{dir / "dataset.jsonl", dir / "aggregates.jsonl"};
  save_dataset(c.store, paths.dataset);

  AggregationOptions opts;
  opts.min_annotators = c.quorum;
  std::ostringstream agg;
  for (const auto& [id, img] : c.store.images()) {
    const ScoreVector s = aggregate(c.store, id, opts);
    ordered_json j;
    j["image_id"] = id;
    j["category_index"] = img.category_index;
    j["n_annotations"] = c.store.annotation_count(id);
    j["total"] = s.total;
    j["attribute_scores"] = attribute_scores_json(s);
    agg << j.dump() << '\n';
  }
  write_atomic(paths.aggregates, agg.str());
  c.phase = CampaignPhase::kClosed;
  persist_snapshot(c);
  return paths;
}

CampaignPhase AnnotationService::phase(const std::string& campaign_id) const {
  Campaign& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  return c.phase;
}

DatasetStore AnnotationService::records(const std::string& campaign_id) const {
  Campaign& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  return c.store;
}

std::optional<std::filesystem::path> AnnotationService::image_path(const std::string& campaign_id,
                                                                   const std::string& image_id) const {
  Campaign& c = find(campaign_id);
  std::lock_guard lock(c.mutex);
  if (!c.store.has_image(image_id)) throw NotFoundError("unknown image " + image_id);
  const auto& fp = c.store.image(image_id).file_path;
  if (fp.empty() || !std::filesystem::is_regular_file(fp)) return std::nullopt;
  return std::filesystem::path(fp);
}

std::vector<std::string> AnnotationService::campaign_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, c] : campaigns_) out.push_back(id);
  return out;
}

// Called with the campaign lock held (or before the campaign is published).
void AnnotationService::persist_snapshot(const Campaign& c) const {
  if (!data_dir_) return;
  ordered_json j;
  j["campaign_id"] = c.id;
  j["phase"] = to_string(c.phase);
  j["quorum"] = c.quorum;
  auto images = ordered_json::array();
  for (const auto& [id, img] : c.store.images()) images.push_back(to_json(img));
  j["images"] = std::move(images);
  auto annotators = ordered_json::array();
  for (const auto& a : c.annotators) {
    std::string token;
    for (const auto& [t, who] : c.tokens)
      if (who == a.annotator_id) token = t;
    annotators.push_back({{"annotator_id", a.annotator_id}, {"role", to_string(a.role)}, {"token", token}});
  }
  j["annotators"] = std::move(annotators);
  ordered_json benchmarks = ordered_json::object();
  for (const auto& [cat, refs] : c.benchmarks) {
    auto arr = ordered_json::array();
    for (const auto& r : refs) arr.push_back(reference_json(r));
    benchmarks[std::to_string(cat)] = std::move(arr);
  }
  j["benchmarks"] = std::move(benchmarks);
  j["assignments"] = c.assignments;
  write_atomic(c.dir(*data_dir_) / "campaign.json", j.dump(2) + "\n");
}

void AnnotationService::restore() {
  for (const auto& entry : std::filesystem::directory_iterator(*data_dir_)) {
    const auto snap = entry.path() / "campaign.json";
    if (!entry.is_directory() || !std::filesystem::exists(snap)) continue;
    std::ifstream in(snap);
    const json j = json::parse(in);
    auto c = std::make_unique<Campaign>();
    c->id = j.at("campaign_id").get<std::string>();
    c->phase = parse_phase(j.at("phase").get<std::string>());
    c->quorum = j.at("quorum").get<std::size_t>();
    for (const auto& img : j.at("images")) {
      c->store.add_image({img.at("image_id").get<std::string>(), img.value("file_path", std::string()),
                          img.at("category_index").get<int>(),
                          parse_source_tier(img.value("source_tier", std::string("professional")))});
    }
    for (const auto& a : j.at("annotators")) {
      c->annotators.push_back({a.at("annotator_id").get<std::string>(), parse_role(a.at("role").get<std::string>())});
      c->tokens[a.at("token").get<std::string>()] = a.at("annotator_id").get<std::string>();
    }
    for (const auto& [cat, refs] : j.at("benchmarks").items()) {
      for (const auto& r : refs) c->benchmarks[std::stoi(cat)].push_back(reference_from_json(r));
    }
    c->assignments = j.at("assignments").get<std::map<std::string, std::vector<std::string>>>();

    std::ifstream log(entry.path() / "annotations.jsonl");
    std::string line;
    while (std::getline(log, line)) {
      if (line.empty()) continue;
      try {
        const json r = json::parse(line);
        AnnotationRecord rec;
        rec.image_id = r.at("image_id").get<std::string>();
        rec.annotator_id = r.at("annotator_id").get<std::string>();
        rec.phase = parse_annotator_phase(r.at("phase").get<std::string>());
        rec.scores = score_vector_from_json(r.at("total_score"), r.at("attribute_scores"));
        rec.timestamp = r.value("timestamp", std::string());
        c->store.add_annotation(std::move(rec), /*overwrite=*/true);
      } catch (const std::exception&) {
        // torn trailing write
      }
    }
    if (c->id.size() > 1 && c->id[0] == 'c') {
      try {
        next_id_ = std::max(next_id_, static_cast<std::size_t>(std::stoul(c->id.substr(1))) + 1);
      } catch (const std::exception&) {
      }
    }
    campaigns_.emplace(c->id, std::move(c));
  }
}

nlohmann::ordered_json to_json(const CampaignProgress& p) {
  ordered_json j;
  j["phase"] = to_string(p.phase);
  j["quorum"] = p.quorum;
  j["num_images"] = p.num_images;
  j["num_records"] = p.num_records;
  ordered_json annot = ordered_json::object();
  for (const auto& [id, a] : p.annotators) {
    annot[id] = {{"assigned", a.assigned}, {"done", a.done}, {"pending", a.pending()}};
  }
  j["annotators"] = std::move(annot);
  j["images_below_quorum"] = p.images_below_quorum;
  j["mean_annotations_per_image"] = p.mean_annotations_per_image;
  return j;
}

nlohmann::ordered_json to_json(const Task& t) {
  ordered_json j;
  j["image_id"] = t.image_id;
  j["image_url"] = t.image_url;
  j["category_index"] = t.category_index;
  auto applicable = ordered_json::array();
  for (Attribute a : t.applicable.to_vector()) applicable.push_back(attribute_key(a));
  j["applicable"] = std::move(applicable);
  auto refs = ordered_json::array();
  for (const auto& r : t.benchmarks) refs.push_back(reference_json(r));
  j["benchmarks"] = std::move(refs);
  return j;
}

std::map<std::string, ScoreVector> load_aggregates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, ScoreVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      out[j.at("image_id").get<std::string>()] = score_vector_from_json(j.at("total"), j.at("attribute_scores"));
    } catch (const std::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace artscore
