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

#include <map>
#include <set>

#include "artscore/errors.hpp"
#include "artscore/taxonomy.hpp"

using namespace artscore;

TEST_CASE("category grid") {
  const auto& cats = all_categories();
  for (int i = 1; i <= 24; ++i) CHECK(cats[i - 1].index == i);
  for (int i = 1; i <= 9; ++i) CHECK(category(i).painting_type == PaintingType::kOil);
  for (int i = 10; i <= 18; ++i) CHECK(category(i).painting_type == PaintingType::kSketching);
  for (int i = 19; i <= 24; ++i) CHECK(category(i).painting_type == PaintingType::kChinese);
  CHECK(category(1).style == Style::kSymbolism);
  CHECK(category(1).subject == Subject::kLandscape);
  CHECK(category(12).style == Style::kSymbolism);
  CHECK(category(12).subject == Subject::kPortraiture);
  CHECK(category(19).style == Style::kMeticulous);
  CHECK(category(19).subject == Subject::kMountainsAndWater);
  CHECK(category(24).style == Style::kFreehand);
  CHECK(category(24).subject == Subject::kPortraiture);
  CHECK_THROWS_AS(category(0), DomainError);
  CHECK_THROWS_AS(category(25), DomainError);
  CHECK_FALSE(is_valid_category(-3));
}

TEST_CASE("applicable cardinalities per category") {
  const std::map<int, std::size_t> expected = {
      {1, 9},  {2, 9},  {4, 9},  {5, 9},  {3, 6},  {6, 6},  {21, 6}, {7, 8},  {8, 8},  {22, 8}, {23, 8}, {9, 7},
      {24, 7}, {10, 8}, {11, 8}, {13, 8}, {14, 8}, {12, 5}, {15, 5}, {16, 7}, {17, 7}, {18, 6}, {19, 9}, {20, 9}};
  REQUIRE(expected.size() == 24);
  for (const auto& [idx, n] : expected) {
    CAPTURE(idx);
    CHECK(applicable_attributes(idx).size() == n);
  }
}

TEST_CASE("mask table structure") {
  const auto& table = canonical_mask_table();
  REQUIRE(table.size() == 24);
  for (const auto& m : table) {
    CAPTURE(m.category_index);
    CHECK((m.applicable & m.ignored).empty());
    CHECK((m.applicable | m.ignored) == AttributeSet::all());
    CHECK(m.applicable.contains(Attribute::kLayoutAndComposition));
    CHECK(m.applicable.contains(Attribute::kDetailsAndTexture));
    CHECK(m.applicable.contains(Attribute::kOverall));
    CHECK(m.ignored.contains(Attribute::kThemeAndLogic) == m.ignored.contains(Attribute::kSenseOfOrder));
    CHECK(m.ignored.contains(Attribute::kSpaceAndPerspective) == m.ignored.contains(Attribute::kLightAndShadow));
    const bool sketch = m.category_index >= 10 && m.category_index <= 18;
    CHECK(m.ignored.contains(Attribute::kColor) == sketch);
  }
}

TEST_CASE("attribute keys round trip") {
  std::set<std::string_view> keys;
  for (Attribute a : kAllAttributes) {
    keys.insert(attribute_key(a));
    CHECK(parse_attribute(attribute_key(a)) == a);
    CHECK(parse_branch(attribute_key(a)) == branch_of(a));
    CHECK(branch_attribute(branch_of(a)) == a);
  }
  CHECK(keys.size() == kNumAttributes);
  CHECK_FALSE(parse_attribute("colour").has_value());
  CHECK_THROWS_AS(attribute_from_key("colour"), DomainError);
  CHECK(parse_branch("total") == kTotalBranch);
  CHECK(branch_name(kTotalBranch) == "total");
  CHECK_FALSE(branch_attribute(kTotalBranch).has_value());
}

TEST_CASE("validate_score_vector") {
  ScoreVector s;
  s.total = 70;
  for (Attribute a : applicable_attributes(12).to_vector()) s.attributes[a] = 50;
  CHECK(validate_score_vector(12, s).ok());

  SUBCASE("ignored attribute present") {
    s.attributes[Attribute::kColor] = 40;
    const auto r = validate_score_vector(12, s);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "color not applicable");
  }
  SUBCASE("missing attribute") {
    s.attributes.erase(Attribute::kOverall);
    const auto r = validate_score_vector(12, s);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "overall missing");
  }
  SUBCASE("range") {
    s.total = 101;
    s.attributes[Attribute::kOverall] = -1;
    CHECK(validate_score_vector(12, s).violations.size() == 2);
    s.total = 0.7;
    for (auto& [a, v] : s.attributes) v = 0.5;
    CHECK(validate_score_vector(12, s, ScoreRange::normalized()).ok());
  }
  SUBCASE("every problem is reported") {
    s.total = 150;
    s.attributes.erase(Attribute::kOverall);
    s.attributes[Attribute::kColor] = 10;
    CHECK(validate_score_vector(12, s).violations.size() == 3);
  }
  SUBCASE("unknown category") { CHECK_FALSE(validate_score_vector(40, s).ok()); }
}

TEST_CASE("expected_annotation_count") {
  std::map<int, std::size_t> totals;
  std::size_t sum = 0;
  for (int c = 1; c <= 24; ++c) {
    totals[c] = 1000 + 37 * c;
    sum += totals[c];
  }
  CHECK(expected_annotation_count(std::nullopt, totals) == sum);
  CHECK(expected_annotation_count(Attribute::kOverall, totals) == sum);
  CHECK(expected_annotation_count(Attribute::kThemeAndLogic, totals) ==
        expected_annotation_count(Attribute::kSenseOfOrder, totals));
  CHECK(expected_annotation_count(Attribute::kSpaceAndPerspective, totals) ==
        expected_annotation_count(Attribute::kLightAndShadow, totals));
  std::size_t sketch = 0;
  for (int c = 10; c <= 18; ++c) sketch += totals[c];
  CHECK(expected_annotation_count(Attribute::kColor, totals) == sum - sketch);

  std::map<int, std::size_t> only_sketch;
  for (int c = 10; c <= 18; ++c) only_sketch[c] = 5;
  CHECK(expected_annotation_count(Attribute::kColor, only_sketch) == 0);
}

TEST_CASE("taxonomy json") {
  const auto j = taxonomy_json();
  REQUIRE(j.size() == 24);
  CHECK(j[11]["index"] == 12);
  CHECK(j[11]["painting_type"] == "sketching");
  CHECK(j[11]["applicable"].size() == 5);
  for (const auto& key : j[11]["applicable"]) CHECK(key != "color");
}
