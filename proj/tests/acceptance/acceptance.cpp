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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "artscore/annotation_service.hpp"
#include "artscore/branch_head.hpp"
#include "artscore/dataset.hpp"
#include "artscore/http_api.hpp"
#include "artscore/image.hpp"
#include "artscore/metrics.hpp"
#include "artscore/model.hpp"
#include "artscore/taxonomy.hpp"
#include "artscore/training.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#ifndef ARTSCORE_BIN
#error "ARTSCORE_BIN must name the artscore executable"
#endif

using namespace artscore;
namespace t = artscore::testing;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome taxonomy_exactness() {
  const std::map<int, std::size_t> expected = {
      {1, 9},  {2, 9},  {3, 6},  {4, 9},  {5, 9},  {6, 6},  {7, 8},  {8, 8},  {9, 7},  {10, 8}, {11, 8}, {12, 5},
      {13, 8}, {14, 8}, {15, 5}, {16, 7}, {17, 7}, {18, 6}, {19, 9}, {20, 9}, {21, 6}, {22, 8}, {23, 8}, {24, 7}};
  const auto& table = canonical_mask_table();
  if (table.size() != 24) return {false, "table has " + std::to_string(table.size()) + " rows"};
  std::vector<std::string> problems;
  for (const auto& m : table) {
    const int c = m.category_index;
    const std::string where = "category " + std::to_string(c) + ": ";
    if (m.applicable.size() != expected.at(c)) problems.push_back(where + "cardinality");
    if (!(m.applicable & m.ignored).empty() || !((m.applicable | m.ignored) == AttributeSet::all()))
      problems.push_back(where + "not a partition");
    if (m.ignored.contains(Attribute::kThemeAndLogic) != m.ignored.contains(Attribute::kSenseOfOrder))
      problems.push_back(where + "theme_and_logic/sense_of_order differ");
    if (m.ignored.contains(Attribute::kSpaceAndPerspective) != m.ignored.contains(Attribute::kLightAndShadow))
      problems.push_back(where + "space_and_perspective/light_and_shadow differ");
    for (Attribute a : {Attribute::kLayoutAndComposition, Attribute::kDetailsAndTexture, Attribute::kOverall})
      if (!m.applicable.contains(a)) problems.push_back(where + std::string(attribute_key(a)) + " ignored");
    if (m.ignored.contains(Attribute::kColor) != (c >= 10 && c <= 18)) problems.push_back(where + "color");
    if (!(applicable_attributes(c) == m.applicable)) problems.push_back(where + "lookup mismatch");
  }
  if (!problems.empty()) return {false, problems.front() + " (+" + std::to_string(problems.size() - 1) + ")"};
  return {true, "24 categories, pattern 9/6/8/7/8/5/7/6/9, pairings hold"};
}

Outcome annotation_count_arithmetic() {
  // Full-size shape: 4985 images over 24 categories, 31,100 records (six per
  // image, a seventh on the first 1190 images).
  DatasetStore store;
  std::mt19937_64 rng(31100);
  std::uniform_real_distribution<double> base(20, 95);
  std::size_t image_no = 0;
  std::map<int, std::size_t> per_category_records;
  for (int c = 1; c <= 24; ++c) {
    const std::size_t n = 4985 / 24 + (static_cast<std::size_t>(c) <= 4985 % 24 ? 1 : 0);
    for (std::size_t i = 0; i < n; ++i, ++image_no) {
      const std::string id = "p" + std::to_string(image_no);
      store.add_image({id, id + ".jpg", c, SourceTier::kProfessional});
      const std::size_t k = image_no < 1190 ? 7 : 6;
      for (std::size_t a = 0; a < k; ++a) {
        AnnotationRecord r;
        r.image_id = id;
        r.annotator_id = "a" + std::to_string((image_no + a) % 51);
        r.scores = t::applicable_scores(c, base(rng), rng);
        store.add_annotation(std::move(r));
        per_category_records[c]++;
      }
    }
  }
  // Direct count over the records.
  std::size_t total = 0;
  std::array<std::size_t, kNumAttributes> counted{};
  for (const auto& [key, r] : store.records()) {
    ++total;
    for (const auto& [a, v] : r.scores.attributes) counted[static_cast<std::size_t>(a)]++;
  }
  auto cnt = [&](Attribute a) { return counted[static_cast<std::size_t>(a)]; };
  std::vector<std::string> problems;
  if (store.images().size() != 4985) problems.push_back("image count");
  if (total != 31100) problems.push_back("record count " + std::to_string(total));
  for (Attribute a : {Attribute::kLayoutAndComposition, Attribute::kDetailsAndTexture, Attribute::kOverall})
    if (cnt(a) != total) problems.push_back(std::string(attribute_key(a)) + " != total");
  if (cnt(Attribute::kThemeAndLogic) != cnt(Attribute::kSenseOfOrder)) problems.push_back("theme != order");
  if (cnt(Attribute::kSpaceAndPerspective) != cnt(Attribute::kLightAndShadow)) problems.push_back("space != light");
  std::size_t sketch = 0;
  for (int c = 10; c <= 18; ++c) sketch += per_category_records[c];
  if (cnt(Attribute::kColor) != total - sketch) problems.push_back("color does not exclude exactly 10-18");
  // Closed-form counts and the statistics report agree with the direct count.
  const auto report = statistics(store);
  if (report.total_score_count != total) problems.push_back("stats total");
  for (Attribute a : kAllAttributes) {
    if (expected_annotation_count(a, per_category_records) != cnt(a))
      problems.push_back("expected_annotation_count " + std::string(attribute_key(a)));
    if (report.attribute_counts[static_cast<std::size_t>(a)] != cnt(a))
      problems.push_back("stats " + std::string(attribute_key(a)));
  }
  if (expected_annotation_count(std::nullopt, per_category_records) != total) problems.push_back("total formula");
  if (!problems.empty()) return {false, problems.front()};
  return {true, "overall " + std::to_string(cnt(Attribute::kOverall)) + " = total " + std::to_string(total) +
                    ", color " + std::to_string(cnt(Attribute::kColor))};
}

Outcome eca_kernel() {
  EcaConfig ceil_mode, nearest;
  nearest.rounding = OddRounding::kNearestOdd;
  const int k = eca_kernel_size(1792, ceil_mode), kn = eca_kernel_size(1792, nearest);
  return {k == 7 && kn == 5, "ceil_odd " + std::to_string(k) + ", nearest_odd " + std::to_string(kn)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(20240601);
  double worst = 0;
  std::size_t components = 0;
  int resampled = 0;
  const int instances = 24;
  for (int i = 0; i < instances; ++i) {
    const int channels = 2 + static_cast<int>(rng() % 15);  // 2..16
    const int batch = 1 + static_cast<int>(rng() % 4);
    const auto r = t::random_gradient_check(rng, channels, batch, 1e-4);
    worst = std::max(worst, r.max_rel_error);
    components += r.components;
    resampled += r.resampled;
  }
  return {worst <= 1e-4, std::to_string(instances) + " instances, " + std::to_string(components) +
                             " components, max rel err " + fmt("%.3g", worst) + ", " + std::to_string(resampled) +
                             " redrawn near ReLU kinks"};
}

bool files_equal(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  return sa == sb;
}

Outcome freeze_invariant() {
  auto set = t::synthetic_training_set(t::uniform_categories(3), 0.67, 5);
  t::TempDir dir("freeze");
  ModelConfig mc;  // toy backbone, full-width heads
  auto model = build_model(mc);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 3;
  ProtocolOptions opts;
  opts.output_dir = dir.path();
  run_full_protocol(model, set.data, cfg, opts);

  std::vector<std::string> problems;
  std::filesystem::path prev = dir / "stage_00_initial";
  std::vector<std::size_t> branches{kTotalBranch};
  for (Attribute a : kAllAttributes) branches.push_back(branch_of(a));
  for (int stage = 1; stage <= 11; ++stage) {
    const std::size_t active = branches[static_cast<std::size_t>(stage - 1)];
    const auto cur = dir / stage_dir_name(stage, active);
    if (!files_equal(prev / "backbone.bin", cur / "backbone.bin"))
      problems.push_back("stage " + std::to_string(stage) + ": backbone changed");
    for (std::size_t b = 0; b < kNumBranches; ++b) {
      const std::string blob = "head_" + branch_name(b) + ".bin";
      const bool same = files_equal(prev / blob, cur / blob);
      if (b != active && !same) problems.push_back("stage " + std::to_string(stage) + ": " + blob + " changed");
      if (b == active && same) problems.push_back("stage " + std::to_string(stage) + ": active head unchanged");
    }
    prev = cur;
  }
  if (!problems.empty()) return {false, problems.front() + " (" + std::to_string(problems.size()) + " problems)"};
  return {true, "11 stages, backbone and 10 inactive heads byte-identical per stage"};
}

Outcome overfit() {
  // 32 uniform-gray 96x96 images; the target is linear in the gray level.
  std::map<std::string, RasterImage> rasters;
  TrainingData data;
  for (int i = 0; i < 32; ++i) {
    const double v = i / 31.0;
    const std::string id = "g" + std::to_string(i);
    rasters[id] = t::gray_image(96, 96, static_cast<std::uint8_t>(255 * v));
    Example e{id, 1 + i % 24, {}};
    e.target.total = 0.25 + 0.5 * v;
    data.train.push_back(e);
  }
  data.images = [&](const std::string& id) { return rasters.at(id); };
  ModelConfig mc;  // toy backbone, seed 0
  auto model = build_model(mc);
  TrainConfig cfg;  // default optimizer settings
  cfg.max_epochs = 200;
  const auto r = train_total_branch(model, data, cfg);
  double err = 0;
  for (const auto& e : data.train) {
    const double p = model.forward(rasters.at(e.image_id), e.category_index).total;
    err += (p - e.target.total) * (p - e.target.total);
  }
  err /= static_cast<double>(data.train.size());
  return {err < 1e-3, "train MSE " + fmt("%.3g", err) + " after " + std::to_string(r.history.size()) + " epochs"};
}

Outcome plateau_rule() {
  std::vector<std::string> problems;
  // Hand-computed positions for a fixed sequence (0-based epochs).
  const std::vector<double> seq = {1.0, 0.9, 0.95, 0.97, 0.8, 0.8, 0.8, 0.7, 0.71, 0.69, 0.69, 0.69, 0.69};
  const std::vector<int> expected = {3, 6, 11};
  PlateauScheduler s(1e-4, 0.5, 2, 1e-6);
  std::vector<int> got;
  for (int e = 0; e < static_cast<int>(seq.size()); ++e) {
    const double before = s.lr();
    if (s.step(seq[e])) {
      got.push_back(e);
      if (s.lr() != before * 0.5) problems.push_back("factor not 0.5");
    } else if (s.lr() != before) {
      problems.push_back("lr changed without a reduction");
    }
  }
  if (got != expected) problems.push_back("fixed sequence positions");

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(0, 1);
  int sequences = 0, reductions = 0;
  for (int trial = 0; trial < 500; ++trial, ++sequences) {
    std::vector<double> losses(40);
    double level = 1.0;
    for (double& l : losses) {
      level *= d(rng) < 0.35 ? 0.95 : 1.0;
      l = level * (1.0 + (d(rng) < 0.5 ? 0.0 : 0.02 * d(rng)));
    }
    const auto want = t::predicted_reductions(losses, 2, 1e-6);
    PlateauScheduler p(1e-4, 0.5, 2, 1e-6);
    std::vector<int> have;
    for (int e = 0; e < 40; ++e)
      if (p.step(losses[e])) have.push_back(e);
    if (have != want) problems.push_back("random sequence " + std::to_string(trial));
    reductions += static_cast<int>(have.size());
  }
  if (!problems.empty()) return {false, problems.front()};
  return {true, std::to_string(sequences + 1) + " sequences, " + std::to_string(reductions + 3) +
                    " reductions at predicted epochs"};
}

Outcome srocc_oracle() {
  std::mt19937_64 rng(1000);
  double worst = 0, worst_inv = 0;
  int vectors = 0, tied = 0;
  while (vectors < 1000) {
    const std::size_t n = 2 + rng() % 49;  // 2..50
    auto a = t::tied_vector(rng, n);
    auto b = t::tied_vector(rng, n);
    if (t::is_constant(a) || t::is_constant(b)) continue;
    ++vectors;
    if (std::set<double>(a.begin(), a.end()).size() < n) ++tied;
    const double s = srocc(a, b);
    worst = std::max(worst, std::abs(s - t::brute_force_srocc(a, b)));
    // Strictly increasing transforms of either argument.
    std::vector<double> fa(a.size()), fb(b.size());
    for (std::size_t i = 0; i < n; ++i) {
      fa[i] = std::exp(a[i] / 4.0) + 3.0 * a[i];
      fb[i] = b[i] * b[i] * b[i] + b[i] - 7.0;
    }
    worst_inv = std::max(worst_inv, std::abs(srocc(fa, fb) - s));
  }
  return {worst <= 1e-9 && worst_inv <= 1e-12,
          std::to_string(vectors) + " vectors (" + std::to_string(tied) + " with ties), max |diff| " +
              fmt("%.2g", worst) + ", transform drift " + fmt("%.2g", worst_inv)};
}

Outcome preprocessing() {
  std::mt19937_64 rng(800);
  std::uniform_real_distribution<double> log_ratio(std::log(0.2), std::log(5.0));
  std::uniform_int_distribution<int> longer(40, 1600);
  std::uniform_int_distribution<int> px(1, 255);
  std::vector<std::string> problems;
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const double ratio = std::exp(log_ratio(rng));  // width / height
    const int l = longer(rng);
    const int h = ratio >= 1 ? std::max(1, static_cast<int>(std::lround(l / ratio))) : l;
    const int w = ratio >= 1 ? l : std::max(1, static_cast<int>(std::lround(l * ratio)));
    RasterImage img(h, w, 3);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(px(rng));
    const FeatureMap f = preprocess(img);
    if (f.channels != 3 || f.height != 800 || f.width != 800) {
      problems.push_back("shape");
      continue;
    }
    // Content is strictly positive, so its bounding box is the non-zero region.
    int top = 800, bottom = -1, left = 800, right = -1;
    for (int y = 0; y < 800; ++y)
      for (int x = 0; x < 800; ++x)
        if (f.at(0, y, x) != 0.0f || f.at(1, y, x) != 0.0f || f.at(2, y, x) != 0.0f) {
          top = std::min(top, y);
          bottom = std::max(bottom, y);
          left = std::min(left, x);
          right = std::max(right, x);
        }
    const int ch = bottom - top + 1, cw = right - left + 1;
    bool padding_zero = true, content_positive = true;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 800; ++y)
        for (int x = 0; x < 800; ++x) {
          const bool inside = y >= top && y <= bottom && x >= left && x <= right;
          const float v = f.at(c, y, x);
          if (!inside && v != 0.0f) padding_zero = false;
          if (inside && !(v > 0.0f)) content_positive = false;
        }
    if (!padding_zero) problems.push_back("non-zero padding");
    if (!content_positive) problems.push_back("hole in content");
    if (std::max(ch, cw) != 800) problems.push_back("longer side not 800");
    // Symmetric padding: the two margins differ by at most one pixel.
    if (std::abs(top - (799 - bottom)) > 1 || std::abs(left - (799 - right)) > 1) problems.push_back("asymmetric");
    // Aspect preserved within one pixel along the shorter side.
    const double dev = h >= w ? std::abs(cw - ch * static_cast<double>(w) / h) : std::abs(ch - cw * static_cast<double>(h) / w);
    worst = std::max(worst, dev);
    if (dev > 1.0) problems.push_back("aspect off by " + fmt("%.2f", dev));
  }
  if (!problems.empty()) return {false, problems.front() + " (" + std::to_string(problems.size()) + " problems)"};
  return {true, "50 aspect ratios in [0.2,5], max aspect deviation " + fmt("%.2f", worst) + " px"};
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), {});
}

Outcome cli_determinism() {
  t::TempDir dir("determinism");
  const auto ds = t::write_image_dataset(dir / "data", t::uniform_categories(2), 6, 11);
  auto run = [&](const std::string& name) {
    const std::string cmd = std::string("\"") + ARTSCORE_BIN + "\" train --dataset \"" + ds.string() + "\" --out \"" +
                            (dir / name).string() +
                            "\" --threads 1 --seed 7 --set max_epochs=3 --set batch_size=16 -q > \"" +
                            (dir / (name + ".log")).string() + "\" 2>&1";
    return std::system(cmd.c_str());
  };
  if (run("a") != 0) return {false, "first run failed: " + read_all(dir / "a.log")};
  if (run("b") != 0) return {false, "second run failed: " + read_all(dir / "b.log")};
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir / "a");
    if (rel.parent_path().empty()) continue;  // run-level logs, not checkpoints
    ++files;
    if (!files_equal(entry.path(), dir / "b" / rel)) return {false, rel.string() + " differs"};
  }
  if (files == 0) return {false, "no checkpoint files"};
  return {true, std::to_string(files) + " checkpoint files byte-identical across two runs"};
}

Outcome service_round_trip() {
  t::TempDir dir("service");
  std::vector<std::string> problems;
  std::map<std::string, std::vector<double>> submitted;  // image -> raw totals
  std::map<std::string, std::map<Attribute, std::vector<double>>> submitted_attr;
  std::string campaign;
  std::map<std::string, int> cat_of;
  {
    AnnotationService service(dir.path());
    HttpServer server(service);
    const int port = server.bind("127.0.0.1", 0);
    if (port <= 0) return {false, "cannot bind"};
    std::thread th([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);

    json spec = {{"quorum", 6}, {"images", json::array()}, {"annotators", json::array()}};
    const int cats[] = {1, 3, 9, 12, 15, 18, 20, 24};
    for (int i = 0; i < 12; ++i) {
      const std::string id = "art" + std::to_string(i);
      cat_of[id] = cats[i % 8];
      spec["images"].push_back({{"image_id", id}, {"category_index", cat_of[id]}});
    }
    spec["annotators"].push_back({{"annotator_id", "expert"}, {"role", "expert"}});
    for (int i = 1; i <= 5; ++i) spec["annotators"].push_back({{"annotator_id", "s" + std::to_string(i)}});
    auto created = client.Post("/campaigns", spec.dump(), "application/json");
    if (!created || created->status != 201) {
      server.stop();
      th.join();
      return {false, "create failed"};
    }
    const json cj = json::parse(created->body);
    campaign = cj["campaign_id"];
    const std::string base = "/campaigns/" + campaign;
    auto auth = [&](const std::string& who) {
      return httplib::Headers{{"Authorization", "Bearer " + cj["tokens"][who].get<std::string>()}};
    };

    std::set<int> used(std::begin(cats), std::end(cats));
    for (int c : used) {
      json attrs = json::object();
      for (Attribute a : applicable_attributes(c).to_vector()) attrs[std::string(attribute_key(a))] = 75;
      const json body = {{"category_index", c},
                         {"references", {{{"image_id", "ref" + std::to_string(c)}, {"total_score", 75},
                                          {"attribute_scores", attrs}}}}};
      auto r = client.Post(base + "/benchmarks", auth("expert"), body.dump(), "application/json");
      if (!r || r->status != 200) problems.push_back("benchmark " + std::to_string(c));
    }
    auto opened = client.Post(base + "/open", auth("expert"), "", "application/json");
    if (!opened || opened->status != 200) problems.push_back("open");

    std::mt19937_64 rng(72);
    std::uniform_int_distribution<int> score(0, 100);
    int accepted = 0;
    for (const auto& who : cj["tokens"].items()) {
      auto tasks = client.Get(base + "/tasks", auth(who.key()));
      if (!tasks || tasks->status != 200) {
        problems.push_back("tasks " + who.key());
        continue;
      }
      const json listing = json::parse(tasks->body);
      for (const auto& task : listing["tasks"]) {
        const std::string id = task["image_id"];
        json attrs = json::object();
        for (const auto& key : task["applicable"]) {
          const int v = score(rng);
          attrs[key.get<std::string>()] = v;
          submitted_attr[id][attribute_from_key(key.get<std::string>())].push_back(v);
        }
        const int total = score(rng);
        submitted[id].push_back(total);
        const json body = {{"image_id", id}, {"total_score", total}, {"attribute_scores", attrs}};
        auto r = client.Post(base + "/annotations", auth(who.key()), body.dump(), "application/json");
        if (r && r->status == 201) {
          ++accepted;
        } else if (problems.empty()) {
          problems.push_back("submission " + who.key() + "/" + id + " -> " +
                             (r ? std::to_string(r->status) + " " + r->body : std::string("no response")));
        }
      }
    }
    if (accepted != 72) problems.push_back("accepted " + std::to_string(accepted) + " of 72");
    auto closed = client.Post(base + "/close", auth("expert"), "", "application/json");
    if (!closed || closed->status != 200) problems.push_back("close");
    server.stop();
    th.join();
  }

  // Reload from disk: the export must parse cleanly and match the mean oracle.
  const auto export_dir = dir / campaign / "export";
  double worst = 0;
  try {
    const DatasetStore exported = load_dataset(export_dir / "dataset.jsonl");
    if (exported.images().size() != 12) problems.push_back("exported images");
    if (exported.records().size() != 72) problems.push_back("exported records");
    for (const auto& [id, img] : exported.images())
      if (exported.annotation_count(id) != 6) problems.push_back(id + " count");
    const auto agg = load_aggregates(export_dir / "aggregates.jsonl");
    if (agg.size() != 12) problems.push_back("aggregates rows");
    for (const auto& [id, totals] : submitted) {
      const auto& s = agg.at(id);
      double mean = 0;
      for (double v : totals) mean += v;
      mean /= static_cast<double>(totals.size()) * 100.0;
      worst = std::max(worst, std::abs(s.total - mean));
      for (const auto& [a, values] : submitted_attr[id]) {
        double m = 0;
        for (double v : values) m += v;
        m /= static_cast<double>(values.size()) * 100.0;
        worst = std::max(worst, std::abs(s.attributes.at(a) - m));
      }
      if (s.attributes.size() != applicable_attributes(cat_of[id]).size()) problems.push_back(id + " attributes");
      const auto recomputed = aggregate(exported, id);
      if (std::abs(recomputed.total - s.total) > 1e-12) problems.push_back(id + " reaggregation");
    }
    AnnotationService restarted(dir.path());
    if (restarted.phase(campaign) != CampaignPhase::kClosed) problems.push_back("phase after restart");
    if (restarted.records(campaign).records().size() != 72) problems.push_back("records after restart");
  } catch (const std::exception& e) {
    problems.push_back(std::string("reload: ") + e.what());
  }
  if (worst > 1e-12) problems.push_back("aggregate deviates by " + fmt("%.3g", worst));
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
    return {false, all};
  }
  return {true, "72 submissions over HTTP, export reloads, aggregates within " + fmt("%.1g", worst) +
                    " of the mean oracle"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"taxonomy exactness", 1, taxonomy_exactness},
      {"annotation count arithmetic", 1, annotation_count_arithmetic},
      {"ECA kernel size", 1, eca_kernel},
      {"gradient correctness", 30, gradient_check},
      {"freeze invariant", 300, freeze_invariant},
      {"overfit smoke test", 120, overfit},
      {"plateau rule", 1, plateau_rule},
      {"SROCC oracle", 10, srocc_oracle},
      {"preprocessing", 5, preprocessing},
      {"end-to-end determinism", 300, cli_determinism},
      {"service round trip", 30, service_round_trip},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << " [" << fmt("%.2f", secs) << "s / " << c.budget_seconds
              << "s] " << o.detail << (in_time ? "" : " (over time budget)") << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
