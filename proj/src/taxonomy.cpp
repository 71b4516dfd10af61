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

#include "artscore/taxonomy.hpp"

#include <cmath>
#include <sstream>

#include "artscore/errors.hpp"

namespace artscore {

const std::array<Attribute, kNumAttributes> kAllAttributes = {
    Attribute::kThemeAndLogic,       Attribute::kCreativity,   Attribute::kLayoutAndComposition,
    Attribute::kSpaceAndPerspective, Attribute::kSenseOfOrder, Attribute::kLightAndShadow,
    Attribute::kColor,               Attribute::kDetailsAndTexture, Attribute::kOverall,
    Attribute::kMood,
};

namespace {

const std::array<AttributeInfo, kNumAttributes> kAttributeInfo = {{
    {Attribute::kThemeAndLogic, "theme_and_logic", "Theme and logic",
     "The central idea and main content of the work conform to its theme."},
    {Attribute::kCreativity, "creativity", "Creativity",
     "The work shows imagination and a unique design able to break traditional rules."},
    {Attribute::kLayoutAndComposition, "layout_and_composition", "Layout and composition",
     "The formal and structural relationship of the picture and its visual effect; layout is "
     "the underlying logic, composition its appearance."},
    {Attribute::kSpaceAndPerspective, "space_and_perspective", "Space and perspective",
     "Layering of space and contrast of near and far; perspective conveys three-dimensionality."},
    {Attribute::kSenseOfOrder, "sense_of_order", "Sense of order",
     "Coordination and wholeness of the visual form through consistency between its elements."},
    {Attribute::kLightAndShadow, "light_and_shadow", "Light and shadow",
     "Changes of light and shadow give the picture visual rhythm."},
    {Attribute::kColor, "color", "Color",
     "Color renders emotional atmosphere; good color matching improves the visual effect."},
    {Attribute::kDetailsAndTexture, "details_and_texture", "Details and texture",
     "A high degree of completion with specific, vivid details and fine texture."},
    {Attribute::kOverall, "overall", "Overall",
     "The overall effect of the picture is coordinated and its theme is clear."},
    {Attribute::kMood, "mood", "Mood",
     "The poetic space blending scene and reality, and the rhythm of active life."},
}};

using A = Attribute;

std::array<ArtisticCategory, kNumCategories> build_categories() {
  std::array<ArtisticCategory, kNumCategories> out{};
  const Style western[] = {Style::kSymbolism, Style::kClassicism, Style::kRomanticism};
  const Subject western_subjects[] = {Subject::kLandscape, Subject::kStillLife, Subject::kPortraiture};
  const Style chinese[] = {Style::kMeticulous, Style::kFreehand};
  const Subject chinese_subjects[] = {Subject::kMountainsAndWater, Subject::kFloralAndAvian,
                                      Subject::kPortraiture};
  int idx = 1;
  for (PaintingType t : {PaintingType::kOil, PaintingType::kSketching}) {
    for (Style s : western) {
      for (Subject sub : western_subjects) {
        out[idx - 1] = {idx, t, s, sub};
        ++idx;
      }
    }
  }
  for (Style s : chinese) {
    for (Subject sub : chinese_subjects) {
      out[idx - 1] = {idx, PaintingType::kChinese, s, sub};
      ++idx;
    }
  }
  return out;
}

AttributeSet ignored_for(int index) {
  switch (index) {
    case 1: case 2: case 4: case 5: case 19: case 20:
      return {A::kCreativity};
    case 3: case 6: case 21:
      return {A::kCreativity, A::kThemeAndLogic, A::kSenseOfOrder, A::kMood};
    case 7: case 8: case 22: case 23:
      return {A::kSpaceAndPerspective, A::kLightAndShadow};
    case 9: case 24:
      return {A::kSpaceAndPerspective, A::kLightAndShadow, A::kMood};
    case 10: case 11: case 13: case 14:
      return {A::kColor, A::kCreativity};
    case 12: case 15:
      return {A::kColor, A::kCreativity, A::kThemeAndLogic, A::kSenseOfOrder, A::kMood};
    case 16: case 17:
      return {A::kColor, A::kSpaceAndPerspective, A::kLightAndShadow};
    case 18:
      return {A::kColor, A::kSpaceAndPerspective, A::kLightAndShadow, A::kMood};
    default:
      throw DomainError("unknown category index " + std::to_string(index));
  }
}

std::vector<AttributeMask> build_mask_table() {
  std::vector<AttributeMask> table;
  table.reserve(kNumCategories);
  for (int i = 1; i <= static_cast<int>(kNumCategories); ++i) {
    AttributeSet ignored = ignored_for(i);
    table.push_back({i, ignored.complement(), ignored});
  }
  return table;
}

std::string format_score(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<Attribute> AttributeSet::to_vector() const {
  std::vector<Attribute> out;
  for (Attribute a : kAllAttributes) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

const AttributeInfo& attribute_info(Attribute a) { return kAttributeInfo.at(static_cast<std::size_t>(a)); }

std::string_view attribute_key(Attribute a) { return attribute_info(a).key; }

std::optional<Attribute> parse_attribute(std::string_view key) {
  for (const auto& info : kAttributeInfo) {
    if (info.key == key) return info.id;
  }
  return std::nullopt;
}

Attribute attribute_from_key(std::string_view key) {
  if (auto a = parse_attribute(key)) return *a;
  throw DomainError("unknown attribute '" + std::string(key) + "'");
}

std::string_view to_string(PaintingType t) {
  switch (t) {
    case PaintingType::kOil: return "oil";
    case PaintingType::kSketching: return "sketching";
    case PaintingType::kChinese: return "chinese";
  }
  return "?";
}

std::string_view to_string(Style s) {
  switch (s) {
    case Style::kSymbolism: return "symbolism";
    case Style::kClassicism: return "classicism";
    case Style::kRomanticism: return "romanticism";
    case Style::kMeticulous: return "meticulous";
    case Style::kFreehand: return "freehand";
  }
  return "?";
}

std::string_view to_string(Subject s) {
  switch (s) {
    case Subject::kLandscape: return "landscape";
    case Subject::kStillLife: return "still_life";
    case Subject::kPortraiture: return "portraiture";
    case Subject::kMountainsAndWater: return "mountains_and_water";
    case Subject::kFloralAndAvian: return "floral_and_avian";
  }
  return "?";
}

const std::array<ArtisticCategory, kNumCategories>& all_categories() {
  static const auto categories = build_categories();
  return categories;
}

bool is_valid_category(int index) { return index >= 1 && index <= static_cast<int>(kNumCategories); }

const ArtisticCategory& category(int index) {
  if (!is_valid_category(index)) {
    throw DomainError("unknown category index " + std::to_string(index));
  }
  return all_categories()[index - 1];
}

const std::vector<AttributeMask>& canonical_mask_table() {
  static const auto table = build_mask_table();
  return table;
}

AttributeSet applicable_attributes(int category_index) {
  if (!is_valid_category(category_index)) {
    throw DomainError("unknown category index " + std::to_string(category_index));
  }
  return canonical_mask_table()[category_index - 1].applicable;
}

ValidationResult validate_score_vector(int category_index, const ScoreVector& scores, ScoreRange range) {
  ValidationResult result;
  if (!is_valid_category(category_index)) {
    result.violations.push_back("unknown category " + std::to_string(category_index));
    return result;
  }
  const AttributeSet applicable = applicable_attributes(category_index);
  auto in_range = [&](double v) { return std::isfinite(v) && v >= range.lo && v <= range.hi; };

  if (!in_range(scores.total)) {
    result.violations.push_back("total score " + format_score(scores.total) + " out of range");
  }
  for (const auto& [attr, value] : scores.attributes) {
    if (!applicable.contains(attr)) {
      result.violations.push_back(std::string(attribute_key(attr)) + " not applicable");
    } else if (!in_range(value)) {
      result.violations.push_back(std::string(attribute_key(attr)) + " score " + format_score(value) +
                                  " out of range");
    }
  }
  for (Attribute a : applicable.to_vector()) {
    if (!scores.attributes.contains(a)) {
      result.violations.push_back(std::string(attribute_key(a)) + " missing");
    }
  }
  return result;
}

std::size_t expected_annotation_count(std::optional<Attribute> attribute,
                                      const std::map<int, std::size_t>& per_category_totals) {
  std::size_t sum = 0;
  for (const auto& [index, count] : per_category_totals) {
    if (!attribute || applicable_attributes(index).contains(*attribute)) sum += count;
  }
  return sum;
}

nlohmann::ordered_json taxonomy_json() {
  auto out = nlohmann::ordered_json::array();
  for (const auto& c : all_categories()) {
    nlohmann::ordered_json entry;
    entry["index"] = c.index;
    entry["painting_type"] = to_string(c.painting_type);
    entry["style"] = to_string(c.style);
    entry["subject"] = to_string(c.subject);
    auto applicable = nlohmann::ordered_json::array();
    for (Attribute a : applicable_attributes(c.index).to_vector()) applicable.push_back(attribute_key(a));
    entry["applicable"] = std::move(applicable);
    out.push_back(std::move(entry));
  }
  return out;
}

std::optional<Attribute> branch_attribute(std::size_t branch) {
  if (branch == kTotalBranch) return std::nullopt;
  if (branch >= kNumBranches) throw DomainError("unknown branch " + std::to_string(branch));
  return kAllAttributes[branch - 1];
}

std::string branch_name(std::size_t branch) {
  auto attr = branch_attribute(branch);
  return attr ? std::string(attribute_key(*attr)) : std::string("total");
}

std::size_t parse_branch(std::string_view name) {
  if (name == "total") return kTotalBranch;
  return branch_of(attribute_from_key(name));
}

}  // namespace artscore
