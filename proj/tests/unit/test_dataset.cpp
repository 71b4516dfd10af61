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

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <thread>

#include "artscore/dataset.hpp"
#include "artscore/errors.hpp"
#include "support/fixtures.hpp"

using namespace artscore;
using artscore::testing::full_store;
using artscore::testing::uniform_categories;

namespace {

AnnotationRecord record(const std::string& image, const std::string& annotator, int cat, double total) {
  AnnotationRecord r;
  r.image_id = image;
  r.annotator_id = annotator;
  r.scores.total = total;
  for (Attribute a : applicable_attributes(cat).to_vector()) r.scores.attributes[a] = total;
  return r;
}

}  // namespace

TEST_CASE("store rejects bad records") {
  DatasetStore s;
  s.add_image({"a", "a.png", 12, SourceTier::kProfessional});
  CHECK_THROWS_AS(s.add_image({"a", "b.png", 3, SourceTier::kProfessional}), ConflictError);
  CHECK_THROWS_AS(s.add_image({"b", "b.png", 0, SourceTier::kProfessional}), DomainError);
  CHECK_THROWS_AS(s.add_annotation(record("zz", "x", 12, 50)), NotFoundError);

  auto bad = record("a", "x", 12, 50);
  bad.scores.attributes[Attribute::kColor] = 10;
  try {
    s.add_annotation(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0] == "color not applicable");
  }

  s.add_annotation(record("a", "x", 12, 50));
  CHECK_THROWS_AS(s.add_annotation(record("a", "x", 12, 60)), ConflictError);
  s.add_annotation(record("a", "x", 12, 60), true);
  CHECK(s.records_for("a").front()->scores.total == 60);
  CHECK(s.annotation_count("a") == 1);
}

TEST_CASE("aggregate is the normalized mean") {
  DatasetStore s;
  s.add_image({"a", "a.png", 1, SourceTier::kProfessional});
  const double totals[] = {40, 50, 60, 70, 80, 100};
  for (int i = 0; i < 6; ++i) s.add_annotation(record("a", "u" + std::to_string(i), 1, totals[i]));
  const auto g = aggregate(s, "a");
  CHECK(g.total == doctest::Approx(400.0 / 6 / 100).epsilon(1e-12));
  CHECK(g.attributes.size() == applicable_attributes(1).size());
  CHECK(g.attributes.at(Attribute::kOverall) == doctest::Approx(400.0 / 6 / 100));

  AggregationOptions trimmed;
  trimmed.trim_fraction = 0.2;  // floor(1.2) = 1 value dropped from each end
  CHECK(aggregate(s, "a", trimmed).total == doctest::Approx(0.65));

  AggregationOptions strict;
  strict.min_annotators = 7;
  CHECK_THROWS_WITH_AS(aggregate(s, "a", strict), doctest::Contains("insufficient annotations (6 < 7)"), DomainError);
  CHECK(aggregate_all(s, strict).empty());
  CHECK(aggregate_all(s).size() == 1);
}

TEST_CASE("split is stratified and deterministic") {
  const auto store = full_store(uniform_categories(10), 1);
  const auto a = split(store, 0.9, 42);
  const auto b = split(store, 0.9, 42);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.validation.size() == 24);
  CHECK(a.train.size() == 216);

  std::map<int, int> val_per_cat;
  for (const auto& id : a.validation) val_per_cat[store.image(id).category_index]++;
  for (const auto& [c, n] : val_per_cat) CHECK(n == 1);

  std::set<std::string> all(a.train.begin(), a.train.end());
  for (const auto& id : a.validation) CHECK(all.insert(id).second);
  CHECK(all.size() == store.images().size());

  const auto c = split(store, 0.9, 43);
  CHECK(c.validation != a.validation);

  CHECK_THROWS_AS(split(store, 1.0), DomainError);
  CHECK_THROWS_AS(split(DatasetStore{}, 0.9), DomainError);
}

TEST_CASE("split counts for uneven categories") {
  const auto store = full_store({{1, 7}, {2, 19}, {3, 1}}, 1);
  const auto s = split(store, 0.9, 0);
  // floor(0.7) + floor(1.9) + floor(0.1)
  CHECK(s.validation.size() == 1);
  CHECK(s.train.size() == 26);
}

TEST_CASE("statistics") {
  auto store = full_store(uniform_categories(2), 6, 3);
  const auto r = statistics(store);
  CHECK(r.num_images == 48);
  CHECK(r.num_records == 288);
  CHECK(r.total_score_count == 288);
  CHECK(r.attribute_counts[static_cast<std::size_t>(Attribute::kOverall)] == 288);
  CHECK(r.attribute_counts[static_cast<std::size_t>(Attribute::kColor)] == 288 - 9 * 12);
  CHECK(r.attribute_counts[static_cast<std::size_t>(Attribute::kThemeAndLogic)] ==
        r.attribute_counts[static_cast<std::size_t>(Attribute::kSenseOfOrder)]);
  CHECK(r.distinct_annotators == 6);
  CHECK(r.expert_annotators == 2);
  CHECK(r.student_annotators == 4);
  CHECK(r.mean_annotations_per_image == doctest::Approx(6.0));
  CHECK(r.professional_images == 48);  // i % 4 == 3 never happens with 2 per category
  CHECK(r.professional_to_student_ratio == 0.0);
  REQUIRE(r.histogram.size() == 10);
  std::size_t binned = 0;
  for (const auto& b : r.histogram) binned += b.count;
  CHECK(binned == 48);
  CHECK(r.histogram.back().hi == 100.0);

  const auto coarse = statistics(store, 30.0);
  CHECK(coarse.histogram.size() == 4);
  CHECK(coarse.histogram.back().hi == 100.0);
  CHECK_THROWS_AS(statistics(store, 0.0), DomainError);

  std::ostringstream csv;
  write_histogram_csv(r, csv);
  CHECK(csv.str().rfind("bin_lo,bin_hi,count\n", 0) == 0);
  const auto j = to_json(r);
  CHECK(j["annotation_counts"]["total_score"] == 288);
}

TEST_CASE("empty store statistics") {
  const auto r = statistics(DatasetStore{});
  CHECK(r.num_images == 0);
  CHECK(r.histogram.empty());
  CHECK(r.mean_annotations_per_image == 0.0);
}

TEST_CASE("jsonl round trip is byte stable") {
  const auto store = full_store({{5, 3}, {12, 2}, {20, 2}}, 6, 9);
  std::ostringstream a;
  write_dataset(store, a);
  std::istringstream in(a.str());
  const auto back = parse_dataset(in);
  CHECK(back == store);
  std::ostringstream b;
  write_dataset(back, b);
  CHECK(a.str() == b.str());
}

TEST_CASE("parse errors carry line numbers and are collected") {
  std::istringstream in(
      R"({"kind":"image","image_id":"a","file_path":"a.png","category_index":12})" "\n"
      "not json\n"
      "\n"
      R"({"kind":"frame"})" "\n"
      R"({"kind":"annotation","image_id":"a","annotator_id":"u","total_score":50,"attribute_scores":{"color":5}})" "\n"
      R"({"kind":"image","image_id":"b","file_path":"b.png","category_index":99})" "\n");
  try {
    parse_dataset(in);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const auto& v = e.violations();
    auto has = [&](const std::string& prefix) {
      return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.rfind(prefix, 0) == 0; });
    };
    CHECK(has("line 2: malformed record"));
    CHECK(has("line 4: unknown kind 'frame'"));
    CHECK(has("line 6: "));
    CHECK(has("line 5 (a/u): color not applicable"));
    CHECK(has("line 5 (a/u): overall missing"));
  }
}

TEST_CASE("shared store concurrent readers and writer") {
  SharedDatasetStore shared;
  shared.write([](DatasetStore& s) {
    for (int i = 0; i < 50; ++i) s.add_image({"i" + std::to_string(i), "", 1, SourceTier::kProfessional});
  });
  std::thread writer([&] {
    for (int i = 0; i < 50; ++i) {
      shared.write([&](DatasetStore& s) { s.add_annotation(record("i" + std::to_string(i), "w", 1, 50)); });
    }
  });
  bool consistent = true;
  for (int k = 0; k < 200; ++k) {
    shared.read([&](const DatasetStore& s) {
      for (const auto& [key, r] : s.records()) {
        if (r.scores.attributes.size() != applicable_attributes(1).size()) consistent = false;
      }
      return 0;
    });
  }
  writer.join();
  CHECK(consistent);
  CHECK(shared.snapshot().records().size() == 50);
}
